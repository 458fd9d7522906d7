#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "erwlab/error.hpp"
#include "erwlab/func_expr.hpp"

using namespace erwlab;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::ConfigInvalid;
}

}  // namespace

TEST(FuncExprParse, IdentityAndConstants) {
    EXPECT_DOUBLE_EQ(FuncExpr::parse("x")(0.3), 0.3);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("1.5e-1 + 2")(0.0), 2.15);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("tanh(x)^3")(0.0), 0.0);
}

TEST(FuncExprParse, Precedence) {
    EXPECT_DOUBLE_EQ(FuncExpr::parse("1 + 2*3")(0.0), 7.0);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("-x^2")(3.0), -9.0);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("2^-1")(0.0), 0.5);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("8/4/2")(0.0), 1.0);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("10-4-3")(0.0), 3.0);
    // same-precedence operators associate to the left, including ^
    EXPECT_DOUBLE_EQ(FuncExpr::parse("2^3^2")(0.0), 64.0);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("(x+1)*(x-1)")(3.0), 8.0);
}

TEST(FuncExprParse, Builtins) {
    EXPECT_DOUBLE_EQ(FuncExpr::parse("abs(x)")(-2.0), 2.0);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("sgn(x)")(0.0), 0.0);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("sgn(x)")(-0.1), -1.0);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("min(x, 0.2)")(0.5), 0.2);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("max(x, 0.2)")(0.5), 0.5);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("sqrt(x)")(0.25), 0.5);
    EXPECT_DOUBLE_EQ(FuncExpr::parse("exp(log(x))")(2.5), std::exp(std::log(2.5)));
    EXPECT_DOUBLE_EQ(FuncExpr::parse("sin(x)")(1.0), std::sin(1.0));
}

TEST(FuncExprParse, Multivariate) {
    const auto f = FuncExpr::parse("x1 + 2*x2 - x3", 3);
    const double x[3] = {1.0, 2.0, 4.0};
    EXPECT_DOUBLE_EQ(f.eval(x), 1.0);
    EXPECT_EQ(f.arity(), 3);
    EXPECT_EQ(f.free_variables(), (std::vector<int>{0, 1, 2}));
}

TEST(FuncExprParse, CubicExampleMap) {
    const auto f = FuncExpr::parse("0.5 + 3*(x-0.5) + (x-0.5)^2 + sgn(x-0.5)*(x-0.5)^3");
    EXPECT_DOUBLE_EQ(f(0.5), 0.5);
    const double u = 0.2;
    EXPECT_NEAR(f(0.5 + u), 0.5 + 3 * u + u * u + u * u * u, 1e-15);
    EXPECT_NEAR(f(0.5 - u), 0.5 - 3 * u + u * u + u * u * u, 1e-15);
}

TEST(FuncExprParse, PiecewiseQuadratic) {
    const auto f = FuncExpr::parse("piecewise(x<0.5 : x^2+0.25 ; x>=0.5 : 0.75-(1-x)^2)");
    EXPECT_DOUBLE_EQ(f(0.5), 0.5);
    EXPECT_DOUBLE_EQ(f(0.25), 0.3125);
    EXPECT_DOUBLE_EQ(f(0.75), 0.6875);
    // symmetric map: f(1-x) = 1 - f(x)
    for (double x : {0.0, 0.1, 0.3, 0.45})
        EXPECT_NEAR(f(1.0 - x), 1.0 - f(x), 1e-15);
}

TEST(FuncExprParse, PiecewiseFirstMatchWins) {
    const auto f = FuncExpr::parse("piecewise(x<=0.5 : 1 ; x>=0.5 : 2)");
    EXPECT_DOUBLE_EQ(f(0.5), 1.0);
}

TEST(FuncExprErrors, Codes) {
    EXPECT_EQ(code_of([] { FuncExpr::parse("2*(x"); }), ErrorCode::SyntaxError);
    EXPECT_EQ(code_of([] { FuncExpr::parse("x +"); }), ErrorCode::SyntaxError);
    EXPECT_EQ(code_of([] { FuncExpr::parse("foo(x)"); }), ErrorCode::UnknownIdentifier);
    EXPECT_EQ(code_of([] { FuncExpr::parse("y"); }), ErrorCode::UnknownIdentifier);
    EXPECT_EQ(code_of([] { FuncExpr::parse("x3", 2); }), ErrorCode::ArityMismatch);
    EXPECT_EQ(code_of([] { FuncExpr::parse("x", 2); }), ErrorCode::ArityMismatch);
    EXPECT_EQ(code_of([] { FuncExpr::parse("log(x)")(-1.0); }), ErrorCode::DomainError);
    EXPECT_EQ(code_of([] { FuncExpr::parse("sqrt(x)")(-1.0); }), ErrorCode::DomainError);
    EXPECT_EQ(code_of([] { FuncExpr::parse("1/x")(0.0); }), ErrorCode::DivisionByZero);
    EXPECT_EQ(code_of([] { FuncExpr::parse("piecewise(x<0.5 : 1)")(0.7); }), ErrorCode::DomainError);
    EXPECT_EQ(code_of([] { FuncExpr::parse("piecewise(x1<0.5 && x2<0.5 : 1)", 2); }), ErrorCode::SyntaxError);
}

TEST(FuncExprErrors, SyntaxErrorReportsOffset) {
    try {
        FuncExpr::parse("x + * 2");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("4"), std::string::npos) << e.what();
    }
}

TEST(FuncExprProperty, PrintParseIdempotent) {
    const char* texts[] = {"x",
                           "-x^2 + 3*x - 1",
                           "2^3^2",
                           "(x-0.5)^3*sgn(x-0.5)",
                           "piecewise(x<0.5 : x^2+0.25 ; x>=0.5 : 0.75-(1-x)^2)",
                           "min(max(x, 0.1), 0.9)/(1 + exp(-x))",
                           "1 - -x",
                           "x^-2",
                           "tanh(x)^3 - sqrt(abs(x))"};
    for (const char* t : texts) {
        const auto a = FuncExpr::parse(t);
        const auto b = FuncExpr::parse(a.to_string());
        EXPECT_TRUE(a.structurally_equal(b)) << t << " -> " << a.to_string();
        EXPECT_EQ(a.to_string(), b.to_string());
        for (double x : {0.2, 0.7}) EXPECT_EQ(a(x), b(x)) << t;
    }
}

TEST(FuncExprProperty, RandomTreesRoundTrip) {
    std::mt19937_64 rng(7);
    const char* ops[] = {"+", "-", "*", "/", "^"};
    auto gen = [&](auto&& self, int depth) -> std::string {
        if (depth == 0 || rng() % 3 == 0) {
            if (rng() % 2) return "x";
            return std::to_string(static_cast<int>(rng() % 9) + 1);
        }
        const int k = static_cast<int>(rng() % 7);
        if (k == 5) return "abs(" + self(self, depth - 1) + ")";
        if (k == 6) return "-(" + self(self, depth - 1) + ")";
        return "(" + self(self, depth - 1) + ")" + ops[k] + "(" + self(self, depth - 1) + ")";
    };
    for (int trial = 0; trial < 200; ++trial) {
        const std::string text = gen(gen, 4);
        const auto a = FuncExpr::parse(text);
        const auto b = FuncExpr::parse(a.to_string());
        ASSERT_TRUE(a.structurally_equal(b)) << text;
    }
}

TEST(FuncExprProperty, EvaluationIsPure) {
    const auto f = FuncExpr::parse("sin(x)*exp(x) - x^3");
    const double first = f(0.37);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(f(0.37), first);
    const FuncExpr copy = f;
    EXPECT_EQ(copy(0.37), first);
}

TEST(FuncExprCompose, SubstituteAndRebind) {
    const auto f = FuncExpr::parse("x^2 + 1");
    const auto g = f.compose({FuncExpr::parse("2*x")});
    EXPECT_DOUBLE_EQ(g(3.0), 37.0);
    const auto h = f.rebind(2, {1});
    const double x[2] = {5.0, 3.0};
    EXPECT_DOUBLE_EQ(h.eval(x), 10.0);
    EXPECT_DOUBLE_EQ(FuncExpr::constant(2.5)(9.0), 2.5);
    EXPECT_DOUBLE_EQ(FuncExpr::variable(1, 2).eval(x), 3.0);
}

TEST(Derivatives, KnownValues) {
    EXPECT_NEAR(derive_at(FuncExpr::parse("tanh(x)"), 0.0, 1).value, 1.0, 1e-8);
    EXPECT_NEAR(derive_at(FuncExpr::parse("x^2"), 0.25, 1).value, 0.5, 1e-10);
    EXPECT_NEAR(derive_at(FuncExpr::parse("exp(x)"), 0.3, 2).value, std::exp(0.3), 1e-7);
    EXPECT_NEAR(derive_at(FuncExpr::parse("sin(x)"), 0.4, 3).value, -std::cos(0.4), 1e-6);
    EXPECT_NEAR(derive_at(FuncExpr::parse("x^6"), 0.5, 6).value, 720.0, 1e-3);
}

TEST(Derivatives, CubicExampleSecondDerivative) {
    // auxiliary-coordinate drift h = (1-p) + (2p-1) f
    for (double p : {0.6, 0.7, 0.9}) {
        const std::string f = "0.5 + 3*(x-0.5) + (x-0.5)^2 + sgn(x-0.5)*(x-0.5)^3";
        const auto h = FuncExpr::parse(std::to_string(1.0 - p) + " + " + std::to_string(2 * p - 1) + "*(" + f + ")");
        EXPECT_NEAR(derive_at(h, 0.5, 2).value, 2.0 * (2.0 * p - 1.0), 1e-6) << p;
    }
}

TEST(Derivatives, PolynomialsMatchSymbolic) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coef(-2.0, 2.0), point(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        double c[6];
        std::string text = "0";
        for (int k = 0; k < 6; ++k) {
            c[k] = std::stod(std::to_string(coef(rng)));  // the value the text actually carries
            text += " + (" + std::to_string(c[k]) + ")*x^" + std::to_string(k);
        }
        const auto f = FuncExpr::parse(text);
        const double x = point(rng);
        double exact = 0.0;
        for (int k = 1; k < 6; ++k) exact += k * c[k] * std::pow(x, k - 1);
        EXPECT_NEAR(derive_at(f, x, 1).value, exact, 1e-9) << text << " at " << x;
    }
}

TEST(Derivatives, NonsmoothPointsRefused) {
    EXPECT_EQ(code_of([] { derive_at(FuncExpr::parse("abs(x-0.5)"), 0.5, 1); }), ErrorCode::NonsmoothAtPoint);
    EXPECT_EQ(code_of([] { derive_at(FuncExpr::parse("piecewise(x<0.5 : x^2+0.25 ; x>=0.5 : 0.75-(1-x)^2)"), 0.5, 2); }),
              ErrorCode::NonsmoothAtPoint);
    EXPECT_EQ(code_of([] { derive_at(FuncExpr::parse("x"), 0.5, 7); }), ErrorCode::OrderUnsupported);
}

TEST(Derivatives, GradientOfMultivariate) {
    const auto f = FuncExpr::parse("x1*x2 + x2^2", 2);
    const double x[2] = {0.3, 0.4};
    const auto g = gradient_at(f, x);
    ASSERT_EQ(g.size(), 2u);
    EXPECT_NEAR(g[0].value, 0.4, 1e-10);
    EXPECT_NEAR(g[1].value, 0.3 + 0.8, 1e-10);
}

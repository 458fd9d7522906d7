#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "erwlab/error.hpp"
#include "erwlab/model.hpp"
#include "erwlab/model_io.hpp"
#include "erwlab/presets.hpp"

using namespace erwlab;

namespace {

ModelSpec erw_spec(double p) { return build_preset("erw", {{"p", std::to_string(p)}}); }

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) x(i++) = e;
    return x;
}

}  // namespace

TEST(Presets, ErwShape) {
    const auto m = build_preset("erw", {{"p", "0.6"}, {"q", "0.5"}});
    EXPECT_EQ(m.s, 1);
    EXPECT_EQ(m.d, 1);
    EXPECT_EQ(m.r, 2);
    EXPECT_DOUBLE_EQ(m.A(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(m.b(0), -1.0);
    const auto v = require_valid(m);
    // P_1 = h(x) = 0.4 + 0.2 x
    for (double x : {0.0, 0.3, 1.0}) EXPECT_NEAR(v.H(vec({x}))(0), 0.4 + 0.2 * x, 1e-15);
}

TEST(Presets, EveryPresetValidates) {
    std::set<std::string> names;
    for (const auto& info : list_presets()) {
        names.insert(info.name);
        EXPECT_FALSE(info.citation.empty()) << info.name;
        const auto r = validate_model(build_preset(info.name));
        EXPECT_TRUE(r.model.has_value()) << info.name << ": " << (r.issues.empty() ? "" : r.issues[0].message);
    }
    for (const char* n : {"erw", "gerw-1d", "minimal", "random-step", "kdim", "market", "linear", "quadratic-sym",
                          "poly-g", "phi-power", "cubic-supercritical"})
        EXPECT_TRUE(names.count(n)) << n;
}

TEST(Presets, ListingIsStable) {
    const auto& a = list_presets();
    const auto& b = list_presets();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].name, b[i].name);
}

TEST(Presets, Errors) {
    try {
        build_preset("nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownPreset);
    }
    for (const char* p : {"0.3", "0.7"}) {
        try {
            build_preset("cubic-supercritical", {{"p", p}});
            FAIL() << p;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::ParameterOutOfRange);
        }
    }
    EXPECT_NO_THROW(build_preset("cubic-supercritical", {{"p", "0.5"}}));
    try {
        build_preset("erw", {{"p", "1.5"}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParameterOutOfRange);
    }
}

TEST(Presets, MinimalMap) {
    const auto v = require_valid(build_preset("minimal", {{"f", "x^2"}, {"p", "0.9"}, {"q", "0.3"}}));
    for (double x : {0.0, 0.4, 1.0}) EXPECT_NEAR(v.H(vec({x}))(0), 0.6 * x * x + 0.3, 1e-15);
}

TEST(Presets, MinimalEqualProbabilitiesIsMemoryless) {
    const auto v = require_valid(build_preset("minimal", {{"p", "0.5"}, {"q", "0.5"}}));
    for (double x : {0.0, 0.25, 0.9}) EXPECT_DOUBLE_EQ(v.H(vec({x}))(0), 0.5);
}

TEST(Presets, MarketMapAtHalf) {
    const auto m = build_preset("market", {{"p", "0.5"}});
    // the memory map f is symmetric about 1/2, so the drift passes through 1/2 there
    const auto v = require_valid(m);
    EXPECT_NEAR(v.H(vec({0.5}))(0), 0.5, 1e-15);
}

TEST(Presets, KdimDirections) {
    const auto m = build_preset("kdim", {{"k", "2"}, {"p", "0.5"}});
    ASSERT_EQ(m.s, 3);
    ASSERT_EQ(m.r, 4);
    std::set<std::pair<int, int>> dirs;
    for (int blk = 0; blk < m.r; ++blk) {
        Eigen::VectorXd inc = Eigen::VectorXd::Zero(m.s);
        for (int c : m.partition[blk]) inc(c) = 1.0;
        const Eigen::VectorXd step = m.A * inc + m.b;
        EXPECT_NEAR(step.norm(), 1.0, 1e-15);
        dirs.insert({static_cast<int>(std::lround(step(0))), static_cast<int>(std::lround(step(1)))});
    }
    EXPECT_EQ(dirs, (std::set<std::pair<int, int>>{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}));
}

TEST(Presets, KdimDriftComponents) {
    const auto v = require_valid(build_preset("kdim", {{"k", "2"}, {"p", "0.7"}}));
    const Eigen::VectorXd x = vec({0.2, 0.3, 0.1});
    const Eigen::VectorXd H = v.H(x);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(H(j), 0.7 * x(j) + 0.3 * (1 - x(j)) / 3.0, 1e-15);
}

TEST(Presets, RandomStepMoments) {
    const auto v = require_valid(build_preset("random-step", {{"z", "1,2"}, {"zp", "0.5,0.5"}}));
    // atoms (1, z, z): counter coordinate first, then the magnitude
    EXPECT_NEAR(v.mu()(0), 1.0, 1e-15);
    EXPECT_NEAR(v.mu()(1), 1.5, 1e-15);
    EXPECT_NEAR(v.second_moment()(1, 1), 2.5, 1e-15);
}

TEST(Validation, ProbabilityOutOfRange) {
    ModelSpec m = erw_spec(0.6);
    m.prob_maps = {FuncExpr::parse("1.2")};
    const auto r = validate_model(m, 11);
    EXPECT_FALSE(r.model.has_value());
    ASSERT_FALSE(r.issues.empty());
    EXPECT_EQ(r.issues[0].code, ErrorCode::ProbabilityOutOfRange);
    EXPECT_EQ(r.violation_count, 11u);
    EXPECT_FALSE(r.issues[0].point.empty());
}

TEST(Validation, PartitionOverlap) {
    ModelSpec m = build_preset("kdim", {{"k", "2"}});
    m.partition[1] = {0};
    const auto r = validate_model(m);
    ASSERT_FALSE(r.issues.empty());
    EXPECT_EQ(r.issues[0].code, ErrorCode::PartitionOverlap);
}

TEST(Validation, StepLawProbabilities) {
    ModelSpec m = erw_spec(0.6);
    m.step_law = StepLaw::finite_support({{1.0}, {2.0}}, {0.5, 0.6});
    EXPECT_FALSE(validate_model(m).model.has_value());
}

TEST(DriftMap, NormBoundedByMean) {
    for (const auto& info : list_presets()) {
        const auto v = require_valid(build_preset(info.name));
        const double bound = v.mu().norm();
        for (const auto& x : domain_grid(v.spec().domain, 21, 2000)) {
            Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
            EXPECT_LE(v.H(Eigen::VectorXd(xv)).norm(), bound + 1e-12) << info.name;
        }
    }
}

TEST(DriftMap, DomainViolation) {
    const auto v = require_valid(erw_spec(0.6));
    try {
        v.H(vec({1.5}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DomainViolation);
    }
}

TEST(MemoryFunctions, Transforms) {
    const Func1D f{FuncExpr::parse("x"), FuncRole::F, std::nullopt};
    const Func1D h = h_from_f(f, 0.75);
    EXPECT_DOUBLE_EQ(h.expr(0.5), 0.5);
    EXPECT_DOUBLE_EQ(h.expr(0.0), 0.25);
    const Func1D g = g_from_f(f);
    for (double y : {-1.0, -0.3, 0.0, 0.8}) EXPECT_NEAR(g.expr(y), y, 1e-15);
}

TEST(MemoryFunctions, DualInducesSameDrift) {
    const Func1D f{FuncExpr::parse("x^2*(3-2*x)"), FuncRole::F, std::nullopt};
    const auto [fs, ps] = dual(f, 0.75);
    EXPECT_DOUBLE_EQ(ps, 0.25);
    const Func1D h1 = h_from_f(f, 0.75), h2 = h_from_f(fs, ps);
    for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        EXPECT_NEAR(h1.expr(x), h2.expr(x), 1e-15);
    }
}

TEST(MemoryFunctions, RoundTripAndSymmetry) {
    const char* maps[] = {"x", "0.9*x^2+0.1", "piecewise(x<0.5 : x^2+0.25 ; x>=0.5 : 0.75-(1-x)^2)", "0.5+0.4*sin(x-0.5)"};
    for (const char* text : maps) {
        const Func1D f{FuncExpr::parse(text), FuncRole::F, std::nullopt};
        const Func1D back = f_from_g(g_from_f(f));
        for (int i = 0; i <= 200; ++i) {
            const double x = i / 200.0;
            EXPECT_NEAR(back.expr(x), f.expr(x), 1e-12) << text;
        }
        EXPECT_EQ(is_symmetric(f), is_odd(g_from_f(f))) << text;
        EXPECT_TRUE(range_ok(f)) << text;
    }
    EXPECT_TRUE(is_symmetric(Func1D{FuncExpr::parse("x"), FuncRole::F, std::nullopt}));
    EXPECT_FALSE(is_symmetric(Func1D{FuncExpr::parse("0.9*x^2+0.1"), FuncRole::F, std::nullopt}));
    EXPECT_FALSE(range_ok(Func1D{FuncExpr::parse("2*x"), FuncRole::F, std::nullopt}));
}

TEST(ModelIo, RoundTripEveryPreset) {
    for (const auto& info : list_presets()) {
        const ModelSpec a = build_preset(info.name);
        const auto ja = model_to_json(a);
        const ModelSpec b = model_from_json(ja);
        EXPECT_EQ(model_to_json(b).dump(), ja.dump()) << info.name;
        EXPECT_EQ(config_hash(ja), config_hash(model_to_json(b)));
        const auto va = require_valid(a), vb = require_valid(b);
        EXPECT_TRUE(va.mu().isApprox(vb.mu())) << info.name;
    }
}

TEST(ModelIo, MalformedDocuments) {
    for (const char* text : {R"([])", R"({"s": 1})", R"({"s": 1, "d": 1, "r": 2, "partition": [[1]], "step_law": {"kind": "weird"}})"}) {
        try {
            model_from_json(nlohmann::json::parse(text));
            FAIL() << text;
        } catch (const Error& e) {
            EXPECT_TRUE(e.code() == ErrorCode::ConfigInvalid || e.code() == ErrorCode::MomentMissing) << e.what();
        }
    }
    try {
        load_model_file("/nonexistent/model.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
    }
}

TEST(ModelIo, HashDependsOnContent) {
    const auto a = model_to_json(erw_spec(0.6)), b = model_to_json(erw_spec(0.61));
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

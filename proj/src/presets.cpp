#include "erwlab/presets.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "erwlab/error.hpp"

namespace erwlab {

namespace {

std::string num_text(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    return v < 0 ? "(" + s + ")" : s;
}

class Args {
public:
    Args(const std::string& preset, const Params& p, std::set<std::string> allowed)
        : preset_(preset), params_(p) {
        for (const auto& [k, v] : p)
            if (!allowed.count(k))
                throw Error(ErrorCode::ParameterOutOfRange, preset + ": unknown parameter '" + k + "'");
    }

    double num(const std::string& key, double def) const {
        auto it = params_.find(key);
        if (it == params_.end()) return def;
        return parse_number(key, it->second);
    }

    std::string text(const std::string& key, const std::string& def) const {
        auto it = params_.find(key);
        return it == params_.end() ? def : it->second;
    }

    std::vector<double> list(const std::string& key, const std::string& def) const {
        std::vector<double> out;
        std::stringstream ss(text(key, def));
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
        if (out.empty()) fail(key + " must be a non-empty list");
        return out;
    }

    void require(bool ok, const std::string& msg) const {
        if (!ok) fail(msg);
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorCode::ParameterOutOfRange, preset_ + ": " + msg);
    }

private:
    double parse_number(const std::string& key, std::string v) const {
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.erase(v.begin());
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.pop_back();
        // allow simple fractions such as 1/6
        const auto slash = v.find('/');
        if (slash != std::string::npos)
            return parse_number(key, v.substr(0, slash)) / parse_number(key, v.substr(slash + 1));
        double out = 0.0;
        const char* b = v.data();
        if (!v.empty() && v[0] == '+') ++b;
        auto res = std::from_chars(b, v.data() + v.size(), out);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size() || v.empty())
            fail("parameter " + key + "='" + v + "' is not a number");
        return out;
    }

    std::string preset_;
    const Params& params_;
};

FuncExpr affine(double c0, double c1, const FuncExpr& e) {
    const int ar = e.arity();
    return FuncExpr::parse("x1 + x2*x3", 3).compose({FuncExpr::constant(c0, ar), FuncExpr::constant(c1, ar), e});
}

FuncExpr scaled(double c, const FuncExpr& e) { return affine(0.0, c, e); }

/// Closed-form derivatives of f; f' first, then f'', ...
struct FDerivs {
    std::vector<std::string> exprs;
    bool complete = false;
};

ModelSpec gerw_1d(const std::string& name, const Params& raw, const FuncExpr& f, double p, double q,
                  const FDerivs* fd) {
    ModelSpec m;
    m.name = name;
    m.params = raw;
    m.s = m.d = 1;
    m.r = 2;
    m.partition = {{0}, {}};
    m.step_law = StepLaw::point_mass({1.0});
    m.prob_maps = {h_from_f({f, FuncRole::F, {}}, p).expr};
    m.A = Eigen::MatrixXd::Constant(1, 1, 2.0);
    m.b = Eigen::VectorXd::Constant(1, -1.0);
    m.initial.atoms = {{1.0}, {0.0}};
    m.initial.probs = {q, 1.0 - q};
    m.domain = Domain::unit_box(1);
    if (fd) {
        DerivativeOverride ov;
        for (std::size_t k = 0; k < fd->exprs.size(); ++k) {
            FuncExpr d = scaled(2.0 * p - 1.0, FuncExpr::parse(fd->exprs[k]));
            if (k == 0) ov.gradient.push_back(d);
            else ov.higher.push_back(d);
        }
        ov.higher_complete = fd->complete;
        m.overrides = {ov};
    }
    return m;
}

void check_unit(const Args& a, double v, const char* key) {
    a.require(v >= 0.0 && v <= 1.0, std::string(key) + " must lie in [0,1]");
}

/// Derivative expressions of f(x) = (1 + g(2x-1))/2 for polynomial g.
FDerivs poly_g_derivs(const std::vector<double>& a) {
    // coefficients of g as c[0] + c[1] y + ...; a[i] multiplies y^(i+1)
    std::vector<double> c(a.size() + 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) c[i + 1] = a[i];
    FDerivs out;
    for (std::size_t k = 1; k < c.size(); ++k) {
        std::vector<double> d(c.size() - k, 0.0);
        for (std::size_t i = k; i < c.size(); ++i) {
            double fall = 1.0;
            for (std::size_t j = 0; j < k; ++j) fall *= static_cast<double>(i - j);
            d[i - k] = c[i] * fall;
        }
        // f^(k)(x) = 2^(k-1) g^(k)(2x - 1)
        const double scale = std::ldexp(1.0, static_cast<int>(k) - 1);
        std::string e = "0";
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (d[i] == 0.0) continue;
            e += " + " + num_text(scale * d[i]) + "*(2*x - 1)^" + std::to_string(i);
        }
        out.exprs.push_back(e);
    }
    out.complete = true;
    return out;
}

}  // namespace

const std::vector<PresetInfo>& list_presets() {
    static const std::vector<PresetInfo> table{
        {"erw", "p=0.75 q=0.5", "classical elephant random walk", "f(x)=x, A=2, b=-1"},
        {"gerw-1d", "f=x p=0.75 q=0.5", "one-dimensional generalized elephant random walk",
         "user memory map f on [0,1]"},
        {"minimal", "f=x p=0.9 q=0.3 r1=0.5", "generalized minimal random walk (steps in {0,1})",
         "P_1(x)=(p-q)f(x)+q, A=1, b=0"},
        {"random-step", "f=x p=0.75 q=0.5 z=1,2 zp=0.5,0.5",
         "generalized elephant random walk with steps of random magnitude", "Y=(1,Z,Z), A=[0 1 -1]"},
        {"kdim", "k=2 f=x p=0.5", "k-dimensional generalized elephant random walk (2k possible directions)",
         "s=2k-1, r=2k, A and b map direction counts to Z^k"},
        {"market", "p=0.5 q=0.5 U=0.5", "two-brand market under the theory of increasing returns",
         "price pi(x)=x^3/2, thresholds U=-L"},
        {"linear", "a=0 b=0.7 p=0.6 q=0.5", "linear memory map example", "f(x)=a x + b"},
        {"quadratic-sym", "p=0.75 q=0.5", "symmetric piecewise-quadratic memory map example",
         "f=x^2+1/4 on [0,1/2], 3/4-(1-x)^2 on [1/2,1]"},
        {"poly-g", "a=0.5 p=0.75 q=0.5", "polynomial location-dependent map example",
         "g(y)=sum a_i y^i with sum i|a_i| < 1"},
        {"phi-power", "phi=tanh k=1 p=0.75 q=0.5", "odd-power location-dependent map example",
         "g(y)=phi(y)^k, phi in {sin, tanh}"},
        {"cubic-supercritical", "p=0.62 q=0.5", "cubic memory map with a third-order kink",
         "f=1/2+3t+t^2+sgn(t)t^3, t=x-1/2, 11/30<p<19/30"},
    };
    return table;
}

ModelSpec build_preset(const std::string& name, const Params& params) {
    if (name == "erw") {
        Args a(name, params, {"p", "q"});
        const double p = a.num("p", 0.75), q = a.num("q", 0.5);
        check_unit(a, p, "p");
        check_unit(a, q, "q");
        FDerivs fd{{"1"}, true};
        return gerw_1d(name, params, FuncExpr::parse("x"), p, q, &fd);
    }
    if (name == "gerw-1d") {
        Args a(name, params, {"f", "p", "q"});
        const double p = a.num("p", 0.75), q = a.num("q", 0.5);
        check_unit(a, p, "p");
        check_unit(a, q, "q");
        return gerw_1d(name, params, FuncExpr::parse(a.text("f", "x")), p, q, nullptr);
    }
    if (name == "linear") {
        Args a(name, params, {"a", "b", "p", "q"});
        const double sa = a.num("a", 0.0), sb = a.num("b", 0.7), p = a.num("p", 0.6), q = a.num("q", 0.5);
        check_unit(a, p, "p");
        check_unit(a, q, "q");
        a.require(sb >= 0.0 && sb <= 1.0 && sa + sb >= 0.0 && sa + sb <= 1.0, "f = a x + b must map [0,1] into [0,1]");
        FDerivs fd{{num_text(sa)}, true};
        return gerw_1d(name, params, affine(sb, sa, FuncExpr::parse("x")), p, q, &fd);
    }
    if (name == "quadratic-sym") {
        Args a(name, params, {"p", "q"});
        const double p = a.num("p", 0.75), q = a.num("q", 0.5);
        check_unit(a, p, "p");
        check_unit(a, q, "q");
        FDerivs fd{{"piecewise(x < 0.5 : 2*x; x >= 0.5 : 2*(1 - x))"}, false};
        return gerw_1d(name, params, FuncExpr::parse("piecewise(x < 0.5 : x^2 + 0.25; x >= 0.5 : 0.75 - (1 - x)^2)"),
                       p, q, &fd);
    }
    if (name == "market") {
        Args a(name, params, {"p", "q", "U"});
        const double p = a.num("p", 0.5), q = a.num("q", 0.5), U = a.num("U", 0.5);
        check_unit(a, p, "p");
        check_unit(a, q, "q");
        a.require(U > 0.0, "U must be positive");
        const double width = 2.0 * U;  // U - L with L = -U
        const std::string price_gap = "(x^3/2 - (1 - x)^3/2)";
        const FuncExpr f = FuncExpr::parse("min(1, max(0, (" + num_text(U) + " - " + price_gap + ")/" +
                                           num_text(width) + "))");
        if (U >= 0.5) {
            // the clamps never bind when U >= max |price gap| = 1/2
            const std::string w = num_text(width);
            FDerivs fd{{"-(3*x^2 + 3*(1 - x)^2)/(2*" + w + ")", "-3*(2*x - 1)/" + w, "-6/" + w}, true};
            return gerw_1d(name, params, f, p, q, &fd);
        }
        return gerw_1d(name, params, f, p, q, nullptr);
    }
    if (name == "poly-g") {
        Args a(name, params, {"a", "p", "q"});
        const double p = a.num("p", 0.75), q = a.num("q", 0.5);
        check_unit(a, p, "p");
        check_unit(a, q, "q");
        const auto coef = a.list("a", "0.5");
        double bound = 0.0;
        for (std::size_t i = 0; i < coef.size(); ++i) bound += (i + 1) * std::fabs(coef[i]);
        a.require(bound < 1.0, "coefficients need sum i|a_i| < 1");
        // g in the variable y = 2x - 1, then f = (1 + g)/2
        std::string gx = "0";
        for (std::size_t i = 0; i < coef.size(); ++i)
            gx += " + " + num_text(coef[i]) + "*(2*x - 1)^" + std::to_string(i + 1);
        const FuncExpr f = FuncExpr::parse("(1 + (" + gx + "))/2");
        FDerivs fd = poly_g_derivs(coef);
        return gerw_1d(name, params, f, p, q, &fd);
    }
    if (name == "phi-power") {
        Args a(name, params, {"phi", "k", "p", "q"});
        const double p = a.num("p", 0.75), q = a.num("q", 0.5);
        check_unit(a, p, "p");
        check_unit(a, q, "q");
        const std::string phi = a.text("phi", "tanh");
        a.require(phi == "sin" || phi == "tanh", "phi must be sin or tanh");
        const double kk = a.num("k", 1.0);
        a.require(kk >= 1.0 && kk == std::floor(kk) && kk <= 32, "k must be a positive integer");
        const FuncExpr f = FuncExpr::parse("(1 + " + phi + "(2*x - 1)^" + num_text(kk) + ")/2");
        return gerw_1d(name, params, f, p, q, nullptr);
    }
    if (name == "cubic-supercritical") {
        Args a(name, params, {"p", "q"});
        const double p = a.num("p", 0.62), q = a.num("q", 0.5);
        a.require(p > 11.0 / 30.0 && p < 19.0 / 30.0, "p must satisfy 11/30 < p < 19/30");
        check_unit(a, q, "q");
        const std::string t = "(x - 0.5)";
        const FuncExpr f = FuncExpr::parse("0.5 + 3*" + t + " + " + t + "^2 + sgn" + t + "*" + t + "^3");
        FDerivs fd{{"3 + 2*" + t + " + 3*" + t + "*abs" + t, "2 + 6*abs" + t}, false};
        return gerw_1d(name, params, f, p, q, &fd);
    }
    if (name == "minimal") {
        Args a(name, params, {"f", "p", "q", "r1"});
        const double p = a.num("p", 0.9), q = a.num("q", 0.3), r1 = a.num("r1", 0.5);
        check_unit(a, p, "p");
        check_unit(a, q, "q");
        check_unit(a, r1, "r1");
        const FuncExpr f = FuncExpr::parse(a.text("f", "x"));
        ModelSpec m;
        m.name = name;
        m.params = params;
        m.s = m.d = 1;
        m.r = 2;
        m.partition = {{0}, {}};
        m.step_law = StepLaw::point_mass({1.0});
        m.prob_maps = {affine(q, p - q, f)};
        m.A = Eigen::MatrixXd::Constant(1, 1, 1.0);
        m.b = Eigen::VectorXd::Zero(1);
        m.initial.atoms = {{1.0}, {0.0}};
        m.initial.probs = {r1, 1.0 - r1};
        m.domain = Domain::unit_box(1);
        DerivativeOverride ov;
        if (f.structurally_equal(FuncExpr::parse("x"))) {
            ov.gradient = {FuncExpr::constant(p - q)};
            ov.higher_complete = true;
            m.overrides = {ov};
        } else if (f.structurally_equal(FuncExpr::parse("x^2"))) {
            ov.gradient = {scaled(2.0 * (p - q), FuncExpr::parse("x"))};
            ov.higher = {FuncExpr::constant(2.0 * (p - q))};
            ov.higher_complete = true;
            m.overrides = {ov};
        }
        return m;
    }
    if (name == "random-step") {
        Args a(name, params, {"f", "p", "q", "z", "zp"});
        const double p = a.num("p", 0.75), q = a.num("q", 0.5);
        check_unit(a, p, "p");
        check_unit(a, q, "q");
        const auto z = a.list("z", "1,2");
        const auto zp = a.list("zp", z.size() == 2 ? "0.5,0.5" : "");
        a.require(z.size() == zp.size(), "z and zp must have the same length");
        double total = 0.0, zmax = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            a.require(z[i] > 0.0 && zp[i] >= 0.0, "step magnitudes must be positive with nonnegative weights");
            total += zp[i];
            zmax = std::max(zmax, z[i]);
        }
        a.require(std::fabs(total - 1.0) < 1e-12, "zp must sum to 1");
        const FuncExpr f = FuncExpr::parse(a.text("f", "x")).rebind(3, {0});
        ModelSpec m;
        m.name = name;
        m.params = params;
        m.s = 3;
        m.d = 1;
        m.r = 2;
        m.partition = {{0, 1}, {2}};
        std::vector<std::vector<double>> atoms;
        for (double v : z) atoms.push_back({1.0, v, v});
        m.step_law = StepLaw::finite_support(atoms, zp);
        m.prob_maps = {affine(1.0 - p, 2.0 * p - 1.0, f)};
        m.A = Eigen::MatrixXd(1, 3);
        m.A << 0.0, 1.0, -1.0;
        m.b = Eigen::VectorXd::Zero(1);
        for (std::size_t i = 0; i < z.size(); ++i) {
            m.initial.atoms.push_back({1.0, z[i], 0.0});
            m.initial.probs.push_back(q * zp[i]);
            m.initial.atoms.push_back({0.0, 0.0, z[i]});
            m.initial.probs.push_back((1.0 - q) * zp[i]);
        }
        m.domain.lower = {0.0, 0.0, 0.0};
        const double inf = std::numeric_limits<double>::infinity();
        m.domain.upper = {1.0, inf, inf};
        m.domain.clip = zmax;
        if (a.text("f", "x") == "x") {
            DerivativeOverride ov;
            ov.gradient = {FuncExpr::constant(2.0 * p - 1.0, 3), FuncExpr::constant(0.0, 3),
                           FuncExpr::constant(0.0, 3)};
            m.overrides = {ov};
        }
        return m;
    }
    if (name == "kdim") {
        Args a(name, params, {"k", "f", "p"});
        const double kk = a.num("k", 2.0), p = a.num("p", 0.5);
        a.require(kk >= 1.0 && kk == std::floor(kk) && kk <= 8, "k must be an integer in 1..8");
        check_unit(a, p, "p");
        const int k = static_cast<int>(kk);
        const int s = 2 * k - 1;
        const std::string ftext = a.text("f", "x");
        const FuncExpr f = FuncExpr::parse(ftext);
        const double rest = (1.0 - p) / s;
        ModelSpec m;
        m.name = name;
        m.params = params;
        m.s = s;
        m.d = k;
        m.r = 2 * k;
        for (int j = 0; j < s; ++j) m.partition.push_back({j});
        m.partition.push_back({});
        m.step_law = StepLaw::point_mass(std::vector<double>(s, 1.0));
        // P_j = p f(x_j) + (1-p)/(2k-1) (1 - f(x_j)) = rest + (p - rest) f(x_j)
        for (int j = 0; j < s; ++j) m.prob_maps.push_back(affine(rest, p - rest, f.rebind(s, {j})));
        m.A = Eigen::MatrixXd::Zero(k, s);
        for (int i = 0; i + 1 < k; ++i) {
            m.A(i, 2 * i) = 1.0;
            m.A(i, 2 * i + 1) = -1.0;
        }
        for (int c = 0; c < s - 1; ++c) m.A(k - 1, c) = 1.0;
        m.A(k - 1, s - 1) = 2.0;
        m.b = Eigen::VectorXd::Zero(k);
        m.b[k - 1] = -1.0;
        for (int j = 0; j < s; ++j) {
            std::vector<double> e(s, 0.0);
            e[j] = 1.0;
            m.initial.atoms.push_back(e);
            m.initial.probs.push_back(1.0 / (2 * k));
        }
        m.initial.atoms.push_back(std::vector<double>(s, 0.0));
        m.initial.probs.push_back(1.0 / (2 * k));
        m.domain = Domain::unit_box(s);
        m.domain.sum_max = 1.0;
        if (ftext == "x") {
            for (int j = 0; j < s; ++j) {
                DerivativeOverride ov;
                for (int c = 0; c < s; ++c) ov.gradient.push_back(FuncExpr::constant(c == j ? p - rest : 0.0, s));
                m.overrides.push_back(ov);
            }
        }
        return m;
    }
    throw Error(ErrorCode::UnknownPreset, "'" + name + "'");
}

}  // namespace erwlab

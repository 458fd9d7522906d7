#include "erwlab/model.hpp"

#include <cmath>
#include <sstream>

namespace erwlab {

// ------------------------------------------------------------ domain

Domain Domain::unit_box(int s) {
    Domain d;
    d.lower.assign(s, 0.0);
    d.upper.assign(s, 1.0);
    return d;
}

bool Domain::contains(std::span<const double> x, double tol) const {
    if (x.size() != lower.size()) return false;
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= lower[i] - tol) || !(x[i] <= upper[i] + tol)) return false;
        sum += x[i];
    }
    return !sum_max || sum <= *sum_max + tol;
}

double Domain::grid_upper(int axis) const {
    return std::isfinite(upper[axis]) ? upper[axis] : lower[axis] + clip;
}

std::vector<std::vector<double>> domain_grid(const Domain& dom, int density, std::size_t cap) {
    const int s = static_cast<int>(dom.lower.size());
    int per_axis = density;
    const double root = std::floor(std::pow(static_cast<double>(cap), 1.0 / s) + 1e-9);
    if (per_axis > root) per_axis = static_cast<int>(root);
    per_axis = std::max(per_axis, 2);

    std::vector<std::vector<double>> out;
    std::vector<int> idx(s, 0);
    std::vector<double> x(s);
    for (;;) {
        for (int a = 0; a < s; ++a) {
            const double lo = dom.lower[a], hi = dom.grid_upper(a);
            x[a] = idx[a] == per_axis - 1 ? hi : lo + (hi - lo) * idx[a] / (per_axis - 1);
        }
        if (dom.contains(x, 1e-12)) out.push_back(x);
        int a = 0;
        while (a < s && ++idx[a] == per_axis) idx[a++] = 0;
        if (a == s) break;
    }
    return out;
}

// ------------------------------------------------------------ step laws

std::vector<std::pair<double, double>> ScalarLaw::atoms() const {
    std::vector<std::pair<double, double>> out;
    switch (family) {
        case Family::Constant: out.push_back({value, 1.0}); break;
        case Family::BernoulliScaled:
            out.push_back({value, prob});
            out.push_back({0.0, 1.0 - prob});
            break;
        case Family::DiscreteUniform:
            for (int k = lo; k <= hi; ++k) out.push_back({double(k), 1.0 / (hi - lo + 1)});
            break;
        case Family::GeometricTruncated: {
            double total = 0.0;
            for (int k = 1; k <= max; ++k) total += std::pow(1.0 - prob, k - 1) * prob;
            for (int k = 1; k <= max; ++k) out.push_back({double(k), std::pow(1.0 - prob, k - 1) * prob / total});
            break;
        }
    }
    return out;
}

StepLaw StepLaw::point_mass(std::vector<double> value) {
    StepLaw law;
    law.kind = Kind::PointMass;
    law.atoms = {std::move(value)};
    law.probs = {1.0};
    return law;
}

StepLaw StepLaw::finite_support(std::vector<std::vector<double>> atoms, std::vector<double> probs) {
    StepLaw law;
    law.kind = Kind::FiniteSupport;
    law.atoms = std::move(atoms);
    law.probs = std::move(probs);
    return law;
}

StepLaw StepLaw::product(std::vector<ScalarLaw> factors) {
    StepLaw law;
    law.kind = Kind::Product;
    law.factors = std::move(factors);
    law.atoms = {{}};
    law.probs = {1.0};
    for (const auto& f : law.factors) {
        std::vector<std::vector<double>> atoms;
        std::vector<double> probs;
        for (std::size_t i = 0; i < law.atoms.size(); ++i) {
            for (const auto& [v, p] : f.atoms()) {
                auto a = law.atoms[i];
                a.push_back(v);
                atoms.push_back(std::move(a));
                probs.push_back(law.probs[i] * p);
            }
        }
        if (atoms.size() > 1000000) throw Error(ErrorCode::MomentMissing, "product step law has too many atoms");
        law.atoms = std::move(atoms);
        law.probs = std::move(probs);
    }
    return law;
}

Eigen::VectorXd StepLaw::mean() const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim());
    for (std::size_t i = 0; i < atoms.size(); ++i)
        m += probs[i] * Eigen::Map<const Eigen::VectorXd>(atoms[i].data(), dim());
    return m;
}

Eigen::MatrixXd StepLaw::second_moment() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim(), dim());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        Eigen::Map<const Eigen::VectorXd> y(atoms[i].data(), dim());
        m += probs[i] * y * y.transpose();
    }
    return m;
}

// ------------------------------------------------------------ validation

namespace {

bool is_integer(double v) { return std::isfinite(v) && v == std::round(v); }

void check_law(const std::vector<std::vector<double>>& atoms, const std::vector<double>& probs, int s,
               const char* what, std::vector<ValidationIssue>& issues) {
    if (atoms.empty() || atoms.size() != probs.size()) {
        issues.push_back({ErrorCode::MomentMissing, std::string(what) + ": atoms and probabilities mismatch", {}});
        return;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (static_cast<int>(atoms[i].size()) != s)
            issues.push_back({ErrorCode::MomentMissing, std::string(what) + ": atom dimension differs from s", {}});
        for (double v : atoms[i])
            if (!std::isfinite(v))
                issues.push_back({ErrorCode::MomentMissing, std::string(what) + ": non-finite atom", atoms[i]});
        if (!(probs[i] >= 0.0))
            issues.push_back({ErrorCode::ProbabilityOutOfRange, std::string(what) + ": negative probability", {}});
        total += probs[i];
    }
    if (std::fabs(total - 1.0) > 1e-12)
        issues.push_back({ErrorCode::ProbabilityOutOfRange, std::string(what) + ": probabilities sum to " +
                                                                 std::to_string(total), {}});
}

}  // namespace

std::string ValidationResult::summary() const {
    std::ostringstream os;
    if (ok()) return "valid";
    os << violation_count << " violation(s)";
    for (std::size_t i = 0; i < issues.size() && i < 5; ++i) {
        os << "; " << to_string(issues[i].code) << ": " << issues[i].message;
        if (!issues[i].point.empty()) {
            os << " at (";
            for (std::size_t k = 0; k < issues[i].point.size(); ++k) os << (k ? "," : "") << issues[i].point[k];
            os << ")";
        }
    }
    return os.str();
}

ValidationResult validate_model(const ModelSpec& spec, int grid_density) {
    ValidationResult res;
    auto& issues = res.issues;
    const int s = spec.s;

    if (s < 1 || spec.d < 1 || spec.r < 1) {
        issues.push_back({ErrorCode::PartitionOverlap, "s, d and r must be positive", {}});
        res.violation_count = issues.size();
        return res;
    }

    // partition: r disjoint contiguous blocks covering 0..s-1, only the last may be empty
    if (static_cast<int>(spec.partition.size()) != spec.r) {
        issues.push_back({ErrorCode::PartitionOverlap, "partition must have r blocks", {}});
    } else {
        std::vector<int> seen(s, 0);
        for (int i = 0; i < spec.r; ++i) {
            const auto& blk = spec.partition[i];
            if (blk.empty() && i != spec.r - 1)
                issues.push_back({ErrorCode::PartitionOverlap, "only the last block may be empty", {}});
            for (std::size_t k = 0; k < blk.size(); ++k) {
                if (blk[k] < 0 || blk[k] >= s) {
                    issues.push_back({ErrorCode::PartitionOverlap, "block index out of range", {}});
                    continue;
                }
                if (k > 0 && blk[k] != blk[k - 1] + 1)
                    issues.push_back({ErrorCode::PartitionOverlap, "blocks must be contiguous", {}});
                ++seen[blk[k]];
            }
        }
        for (int c = 0; c < s; ++c)
            if (seen[c] != 1)
                issues.push_back({ErrorCode::PartitionOverlap,
                                  "coordinate " + std::to_string(c + 1) + " covered " + std::to_string(seen[c]) +
                                      " times",
                                  {}});
    }

    if (static_cast<int>(spec.prob_maps.size()) != spec.r - 1)
        issues.push_back({ErrorCode::ArityMismatch, "need r-1 probability maps", {}});
    for (const auto& p : spec.prob_maps)
        if (p.empty() || p.arity() != s)
            issues.push_back({ErrorCode::ArityMismatch, "probability map arity must equal s", {}});
    if (!spec.overrides.empty() && spec.overrides.size() != spec.prob_maps.size())
        issues.push_back({ErrorCode::ArityMismatch, "derivative overrides must match the probability maps", {}});

    check_law(spec.step_law.atoms, spec.step_law.probs, s, "step law", issues);
    check_law(spec.initial.atoms, spec.initial.probs, s, "initial law", issues);

    if (spec.A.rows() != spec.d || spec.A.cols() != s || spec.b.size() != spec.d)
        issues.push_back({ErrorCode::ArityMismatch, "A must be d x s and b a d-vector", {}});
    if (static_cast<int>(spec.domain.lower.size()) != s || static_cast<int>(spec.domain.upper.size()) != s)
        issues.push_back({ErrorCode::DomainViolation, "domain bounds must have s entries", {}});

    if (!issues.empty()) {
        res.violation_count = issues.size();
        return res;
    }

    for (const auto& atom : spec.step_law.atoms)
        for (int c = 0; c < s; ++c)
            if (atom[c] < spec.domain.lower[c] - 1e-12 || atom[c] > spec.domain.upper[c] + 1e-12)
                issues.push_back({ErrorCode::DomainViolation, "step atom outside the domain rectangle", atom});

    const Eigen::MatrixXd sigma = spec.step_law.second_moment();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, sigma.norm()))
        issues.push_back({ErrorCode::MomentMissing, "second moment is not positive semidefinite", {}});

    // probability constraint on the validation grid
    std::vector<double> p(spec.r - 1);
    for (const auto& x : domain_grid(spec.domain, grid_density)) {
        try {
            double total = 0.0;
            bool bad = false;
            for (int i = 0; i < spec.r - 1; ++i) {
                p[i] = spec.prob_maps[i].eval(x);
                if (!(p[i] >= -1e-12 && p[i] <= 1.0 + 1e-12)) bad = true;
                total += p[i];
            }
            if (bad || total > 1.0 + 1e-12) {
                ++res.violation_count;
                if (issues.size() < ValidationResult::kMaxIssues) {
                    std::ostringstream os;
                    os << "P = (";
                    for (int i = 0; i < spec.r - 1; ++i) os << (i ? "," : "") << p[i];
                    os << ")";
                    issues.push_back({ErrorCode::ProbabilityOutOfRange, os.str(), x});
                }
            }
        } catch (const Error& e) {
            ++res.violation_count;
            if (issues.size() < ValidationResult::kMaxIssues) issues.push_back({e.code(), e.what(), x});
        }
    }
    res.violation_count = std::max(res.violation_count, issues.size());
    if (!issues.empty()) return res;

    auto impl = std::make_shared<ValidatedModel::Impl>();
    impl->spec = spec;
    impl->mu = spec.step_law.mean();
    impl->sigma = sigma;
    for (const auto& blk : spec.partition) {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(s);
        Eigen::MatrixXd sg = Eigen::MatrixXd::Zero(s, s);
        for (int a : blk) {
            m[a] = impl->mu[a];
            for (int c : blk) sg(a, c) = sigma(a, c);
        }
        impl->block_mu.push_back(m);
        impl->block_sigma.push_back(sg);
    }
    bool lattice = spec.d == 1;
    for (const auto& atom : spec.step_law.atoms) {
        impl->max_atom_norm =
            std::max(impl->max_atom_norm, Eigen::Map<const Eigen::VectorXd>(atom.data(), s).norm());
        for (double v : atom) lattice = lattice && is_integer(v);
    }
    for (const auto& atom : spec.initial.atoms)
        for (double v : atom) lattice = lattice && is_integer(v);
    for (Eigen::Index i = 0; i < spec.A.size(); ++i) lattice = lattice && is_integer(spec.A.data()[i]);
    for (Eigen::Index i = 0; i < spec.b.size(); ++i) lattice = lattice && is_integer(spec.b[i]);
    impl->lattice = lattice;

    res.model = ValidatedModel(std::move(impl));
    return res;
}

ValidatedModel require_valid(const ModelSpec& spec, int grid_density) {
    auto res = validate_model(spec, grid_density);
    if (!res.ok()) {
        const ErrorCode code = res.issues.empty() ? ErrorCode::ConfigInvalid : res.issues.front().code;
        throw Error(code, "model '" + spec.name + "' invalid: " + res.summary());
    }
    return *res.model;
}

// ------------------------------------------------------------ validated model

void ValidatedModel::probs(std::span<const double> x, std::span<double> out) const {
    const auto& maps = impl_->spec.prob_maps;
    for (std::size_t i = 0; i < maps.size(); ++i) out[i] = maps[i].eval(x);
}

std::vector<double> ValidatedModel::all_probs(std::span<const double> x) const {
    if (!impl_->spec.domain.contains(x, 1e-9)) throw Error(ErrorCode::DomainViolation, "point outside D_s");
    std::vector<double> p(r());
    probs(x, std::span<double>(p.data(), r() - 1));
    double total = 0.0;
    for (int i = 0; i < r() - 1; ++i) total += p[i];
    p[r() - 1] = 1.0 - total;
    return p;
}

Eigen::VectorXd ValidatedModel::H(std::span<const double> x) const {
    const auto p = all_probs(x);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(s());
    for (int i = 0; i < r(); ++i) h += p[i] * impl_->block_mu[i];
    return h;
}

Eigen::VectorXd ValidatedModel::H(const Eigen::VectorXd& x) const {
    return H(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Derivative ValidatedModel::prob_partial(int i, int j, std::span<const double> x) const {
    const auto& spec = impl_->spec;
    if (!spec.overrides.empty() && !spec.overrides[i].gradient.empty())
        return {spec.overrides[i].gradient[j].eval(x), 0.0};
    std::vector<double> y(x.begin(), x.end());
    return derive_callable(
        [&](double t) {
            std::vector<double> z = y;
            z[j] = t;
            return spec.prob_maps[i].eval(z);
        },
        y[j], 1);
}

std::optional<Derivative> ValidatedModel::prob_derivative_1d(int i, double x, int order) const {
    const auto& spec = impl_->spec;
    if (spec.s != 1 || order < 1) return std::nullopt;
    const DerivativeOverride* ov = spec.overrides.empty() ? nullptr : &spec.overrides[i];
    if (ov) {
        if (order == 1 && !ov->gradient.empty()) return Derivative{ov->gradient[0](x), 0.0};
        if (order >= 2 && order - 2 < static_cast<int>(ov->higher.size()))
            return Derivative{ov->higher[order - 2](x), 0.0};
        if (order >= 2 && ov->higher_complete && !ov->gradient.empty()) return Derivative{0.0, 0.0};
    }
    if (order > 6) return std::nullopt;
    try {
        return derive_at(spec.prob_maps[i], x, order);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NonsmoothAtPoint || e.code() == ErrorCode::DomainError) return std::nullopt;
        throw;
    }
}

Eigen::MatrixXd ValidatedModel::jacobian(const Eigen::VectorXd& x) const {
    const int n = s();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    std::span<const double> xs(x.data(), static_cast<std::size_t>(n));
    for (int i = 0; i + 1 < r(); ++i) {
        const Eigen::VectorXd dir = impl_->block_mu[i] - impl_->block_mu[r() - 1];
        for (int j = 0; j < n; ++j) {
            double dp;
            try {
                dp = prob_partial(i, j, xs).value;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::NonsmoothAtPoint)
                    throw Error(ErrorCode::JacobianNonsmooth, std::string("P_") + std::to_string(i + 1) + ": " + e.what());
                throw;
            }
            J.col(j) += dp * dir;
        }
    }
    return J;
}

std::optional<double> ValidatedModel::H_derivative_1d(double x, int order) const {
    if (s() != 1) return std::nullopt;
    double total = 0.0;
    for (int i = 0; i + 1 < r(); ++i) {
        auto d = prob_derivative_1d(i, x, order);
        if (!d) return std::nullopt;
        total += d->value * (impl_->block_mu[i][0] - impl_->block_mu[r() - 1][0]);
    }
    return total;
}

// ------------------------------------------------------------ f, g, h transforms

Func1D h_from_f(const Func1D& f, double p) {
    const FuncExpr lin = FuncExpr::constant(1.0 - p);
    const FuncExpr slope = FuncExpr::constant(2.0 * p - 1.0);
    const FuncExpr form = FuncExpr::parse("x1 + x2*x3", 3);
    Func1D h;
    h.expr = form.compose({lin, slope, f.expr});
    h.role = FuncRole::H;
    h.memory_p = p;
    return h;
}

Func1D g_from_f(const Func1D& f) {
    const FuncExpr inner = f.expr.compose({FuncExpr::parse("(x + 1)/2")});
    Func1D g;
    g.expr = FuncExpr::parse("2*x - 1").compose({inner});
    g.role = FuncRole::G;
    return g;
}

Func1D f_from_g(const Func1D& g) {
    const FuncExpr inner = g.expr.compose({FuncExpr::parse("2*x - 1")});
    Func1D f;
    f.expr = FuncExpr::parse("(1 + x)/2").compose({inner});
    f.role = FuncRole::F;
    return f;
}

std::pair<Func1D, double> dual(const Func1D& f, double p) {
    Func1D fs;
    fs.expr = FuncExpr::parse("1 - x").compose({f.expr});
    fs.role = FuncRole::F;
    return {fs, 1.0 - p};
}

bool is_symmetric(const Func1D& f, int grid, double tol) {
    for (int i = 0; i < grid; ++i) {
        const double x = static_cast<double>(i) / (grid - 1);
        if (std::fabs(f.expr(x) + f.expr(1.0 - x) - 1.0) > tol) return false;
    }
    return true;
}

bool is_odd(const Func1D& g, int grid, double tol) {
    for (int i = 0; i < grid; ++i) {
        const double x = -1.0 + 2.0 * i / (grid - 1);
        if (std::fabs(g.expr(x) + g.expr(-x)) > tol) return false;
    }
    return true;
}

bool range_ok(const Func1D& fn, int grid) {
    const bool is_g = fn.role == FuncRole::G;
    const double lo = is_g ? -1.0 : 0.0;
    for (int i = 0; i < grid; ++i) {
        const double x = is_g ? -1.0 + 2.0 * i / (grid - 1) : static_cast<double>(i) / (grid - 1);
        const double v = fn.expr(x);
        if (!(v >= lo - 1e-12 && v <= 1.0 + 1e-12)) return false;
    }
    return true;
}

}  // namespace erwlab

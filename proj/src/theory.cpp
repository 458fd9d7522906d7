#include "erwlab/theory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "erwlab/error.hpp"

namespace erwlab {

using cd = std::complex<double>;

const char* to_string(Regime r) {
    switch (r) {
        case Regime::Diffusive: return "Diffusive";
        case Regime::Critical: return "Critical";
        case Regime::Supercritical: return "Supercritical";
        case Regime::Unsupported: return "Unsupported";
    }
    return "Unsupported";
}

Regime regime_of_tau(double tau, double tol) {
    if (tau >= 1.0 - tol) return Regime::Unsupported;
    if (tau < 0.5 - tol) return Regime::Diffusive;
    if (std::fabs(tau - 0.5) <= tol) return Regime::Critical;
    return Regime::Supercritical;
}

// ---------------------------------------------------------------- fixed point

namespace {

Eigen::VectorXd solve_1d(const ValidatedModel& model) {
    const Domain& dom = model.spec().domain;
    const double lo = dom.lower[0], hi = dom.grid_upper(0);
    auto g = [&](double x) {
        const double xs[1] = {x};
        return model.H(std::span<const double>(xs, 1))(0) - x;
    };
    constexpr int kScan = 2000;
    std::vector<double> xs(kScan + 1), gs(kScan + 1);
    for (int i = 0; i <= kScan; ++i) {
        xs[i] = lo + (hi - lo) * i / kScan;
        gs[i] = g(xs[i]);
    }
    std::vector<double> roots;
    auto add_root = [&](double r) {
        if (roots.empty() || std::fabs(roots.back() - r) > 1e-8) roots.push_back(r);
    };
    for (int i = 0; i <= kScan; ++i) {
        if (gs[i] == 0.0) {
            add_root(xs[i]);
            continue;
        }
        if (i < kScan && gs[i + 1] != 0.0 && (gs[i] < 0.0) != (gs[i + 1] < 0.0)) {
            double a = xs[i], b = xs[i + 1], ga = gs[i];
            for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
                const double mid = 0.5 * (a + b);
                const double gm = g(mid);
                if (gm == 0.0) {
                    a = b = mid;
                    break;
                }
                if ((gm < 0.0) == (ga < 0.0)) {
                    a = mid;
                    ga = gm;
                } else {
                    b = mid;
                }
            }
            add_root(0.5 * (a + b));
        }
    }
    if (roots.empty()) throw Error(ErrorCode::NoRootInDomain, "h(x) - x has no sign change on the domain");
    if (roots.size() > 1)
        throw Error(ErrorCode::MultipleRoots, "H(x) = x has " + std::to_string(roots.size()) + " roots, e.g. " +
                                                  std::to_string(roots[0]) + " and " + std::to_string(roots[1]));
    return Eigen::VectorXd::Constant(1, roots.front());
}

Eigen::VectorXd project(const Domain& dom, Eigen::VectorXd x) {
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = std::clamp(x(j), dom.lower[j], dom.grid_upper(static_cast<int>(j)));
    if (dom.sum_max && x.sum() > *dom.sum_max) x *= *dom.sum_max / x.sum();
    return x;
}

std::optional<Eigen::VectorXd> damped_iteration(const ValidatedModel& model, Eigen::VectorXd x) {
    for (int it = 0; it < 200000; ++it) {
        const Eigen::VectorXd step = model.H(x) - x;
        if (step.lpNorm<Eigen::Infinity>() < 1e-14) return x;
        x = project(model.spec().domain, x + 0.5 * step);
    }
    return std::nullopt;
}

}  // namespace

Eigen::VectorXd find_fixed_point(const ValidatedModel& model) {
    if (model.s() == 1) return solve_1d(model);
    const Domain& dom = model.spec().domain;
    const int s = model.s();
    Eigen::VectorXd lo(s), hi(s);
    for (int j = 0; j < s; ++j) {
        lo(j) = dom.lower[j];
        hi(j) = dom.grid_upper(j);
    }
    std::vector<Eigen::VectorXd> starts{project(dom, 0.5 * (lo + hi))};
    const int corners = s <= 3 ? (1 << s) : 8;
    for (int c = 0; c < corners; ++c) {
        // beyond three axes, spread the 8 corners with a fixed bit pattern
        Eigen::VectorXd x(s);
        for (int j = 0; j < s; ++j) {
            const int bit = s <= 3 ? (c >> j) & 1 : ((c * 2654435761u) >> (j % 29)) & 1;
            x(j) = bit ? hi(j) : lo(j);
        }
        starts.push_back(project(dom, x));
    }
    std::optional<Eigen::VectorXd> root;
    for (const auto& x : starts) {
        const auto r = damped_iteration(model, x);
        if (!r) continue;
        if (!root) {
            root = r;
        } else if ((*root - *r).lpNorm<Eigen::Infinity>() > 1e-8) {
            throw Error(ErrorCode::MultipleRoots, "multi-start iterations reached distinct fixed points");
        }
    }
    if (!root) throw Error(ErrorCode::NoRootInDomain, "damped iteration did not converge from any start");
    return *root;
}

DowncrossingResult check_downcrossing(const ValidatedModel& model, const Eigen::VectorXd& x0, int grid_density) {
    DowncrossingResult res;
    res.max_value = -std::numeric_limits<double>::infinity();
    for (const auto& pt : domain_grid(model.spec().domain, grid_density)) {
        const Eigen::Map<const Eigen::VectorXd> x(pt.data(), static_cast<Eigen::Index>(pt.size()));
        if ((x - x0).norm() < 1e-6) continue;
        const double v = (x - x0).dot(model.H(x) - x);
        ++res.points;
        if (v > res.max_value) {
            res.max_value = v;
            res.argmax = pt;
        }
    }
    res.verified = res.points > 0 && res.max_value < 0.0;
    return res;
}

// ---------------------------------------------------------------- spectrum

namespace {

std::optional<std::pair<long long, long long>> parse_rational(const std::string& text) {
    auto parse_decimal = [](std::string_view t) -> std::optional<std::pair<long long, long long>> {
        bool neg = false;
        if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
            neg = t[0] == '-';
            t.remove_prefix(1);
        }
        long long num = 0, den = 1;
        bool dot = false, any = false;
        for (char c : t) {
            if (c == '.') {
                if (dot) return std::nullopt;
                dot = true;
                continue;
            }
            if (c < '0' || c > '9') return std::nullopt;
            if (num > 100000000000000LL) return std::nullopt;
            num = num * 10 + (c - '0');
            if (dot) den *= 10;
            any = true;
        }
        if (!any) return std::nullopt;
        return std::make_pair(neg ? -num : num, den);
    };
    const auto slash = text.find('/');
    if (slash == std::string::npos) return parse_decimal(text);
    const auto a = parse_decimal(std::string_view(text).substr(0, slash));
    const auto b = parse_decimal(std::string_view(text).substr(slash + 1));
    if (!a || !b || b->first == 0) return std::nullopt;
    return std::make_pair(a->first * b->second, a->second * b->first);
}

std::pair<long long, long long> reduce(long long n, long long d) {
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const long long g = std::gcd(n < 0 ? -n : n, d);
    return {n / (g ? g : 1), d / (g ? g : 1)};
}

}  // namespace

std::optional<std::pair<long long, long long>> exact_tau(const ModelSpec& spec) {
    // unset parameters take the preset defaults
    auto param = [&](const char* key, const char* fallback) -> std::optional<std::pair<long long, long long>> {
        auto it = spec.params.find(key);
        return parse_rational(it == spec.params.end() ? std::string(fallback) : it->second);
    };
    if (spec.name == "erw") {
        const auto p = param("p", "0.75");
        if (!p) return std::nullopt;
        return reduce(2 * p->first - p->second, p->second);  // 2p - 1
    }
    if (spec.name == "linear") {
        const auto p = param("p", "0.6"), a = param("a", "0");
        if (!p || !a) return std::nullopt;
        return reduce((2 * p->first - p->second) * a->first, p->second * a->second);  // (2p - 1) a
    }
    if (spec.name == "minimal") {
        auto f = spec.params.find("f");
        if (f != spec.params.end() && f->second != "x") return std::nullopt;
        const auto p = param("p", "0.9"), q = param("q", "0.3");
        if (!p || !q) return std::nullopt;
        return reduce(p->first * q->second - q->first * p->second, p->second * q->second);  // p - q
    }
    return std::nullopt;
}

SpectralProfile profile_of_jacobian(const Eigen::MatrixXd& J) {
    SpectralProfile prof;
    prof.J = J;
    prof.jordan = jordan_profile(J);
    prof.tau = prof.jordan.tau;
    prof.kappa = prof.jordan.kappa;
    if (prof.kappa == 1) {
        const Eigen::Index s = J.rows();
        const double tol = 1e-9 * std::max(1.0, J.norm());
        std::vector<Eigen::MatrixXcd> rights, lefts;
        Eigen::Index cols = 0;
        for (const auto& c : prof.jordan.clusters) {
            if (std::fabs(c.value.real() - prof.tau) > prof.jordan.cluster_tol * std::max(1.0, std::abs(c.value))) continue;
            const Eigen::MatrixXcd B = J.cast<cd>() - c.value * Eigen::MatrixXcd::Identity(s, s);
            Eigen::MatrixXcd V = null_space(B, tol * 1e3);
            Eigen::MatrixXcd W = null_space(B.transpose(), tol * 1e3);
            if (V.cols() == 0 || V.cols() != W.cols()) continue;
            // Q = W (V^T W)^-1 so that Q^T V = I
            const Eigen::MatrixXcd G = V.transpose() * W;
            W = W * G.fullPivLu().inverse();
            rights.push_back(V);
            lefts.push_back(W);
            cols += V.cols();
        }
        prof.right.resize(s, cols);
        prof.left.resize(s, cols);
        Eigen::Index o = 0;
        for (std::size_t i = 0; i < rights.size(); ++i) {
            prof.right.middleCols(o, rights[i].cols()) = rights[i];
            prof.left.middleCols(o, lefts[i].cols()) = lefts[i];
            o += rights[i].cols();
        }
    }
    return prof;
}

SpectralProfile spectral_profile(const ValidatedModel& model, const Eigen::VectorXd& x0) {
    SpectralProfile prof = profile_of_jacobian(model.jacobian(x0));
    if (const auto q = exact_tau(model.spec())) {
        prof.exact_tau = true;
        prof.tau_rational = q;
        prof.tau = static_cast<double>(q->first) / static_cast<double>(q->second);
    }
    if (prof.tau >= 1.0 - kRegimeTol)
        throw Error(ErrorCode::TauAtLeastOne, "tau = " + std::to_string(prof.tau) + " >= 1 is outside the supported theory");
    return prof;
}

// ---------------------------------------------------------------- covariances

Eigen::MatrixXd sigma0_at(const ValidatedModel& model, const Eigen::VectorXd& x0) {
    const auto P = model.all_probs(std::span<const double>(x0.data(), static_cast<std::size_t>(x0.size())));
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(model.s(), model.s());
    for (int i = 0; i < model.r(); ++i) S += P[i] * model.block_second_moment(i);
    return S - x0 * x0.transpose();
}

Eigen::MatrixXd sigma2_from_jordan(const Eigen::MatrixXcd& P, const std::vector<JordanBlockSpec>& blocks,
                                   const Eigen::MatrixXd& sigma0) {
    const Eigen::MatrixXcd Pinv = P.inverse();
    const Eigen::MatrixXcd S0 = sigma0.cast<cd>();
    int kappa = 0;
    for (const auto& b : blocks)
        if (std::fabs(b.value.real() - 0.5) <= kRegimeTol) kappa = std::max(kappa, b.size);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(P.rows(), P.rows());
    if (kappa == 0) return acc.real();
    double fact = 1.0;
    for (int k = 2; k < kappa; ++k) fact *= k;
    Eigen::Index o = 0;
    for (const auto& b : blocks) {
        if (std::fabs(b.value.real() - 0.5) <= kRegimeTol && b.size == kappa) {
            const Eigen::VectorXcd R = P.col(o);
            const Eigen::VectorXcd Q = Pinv.row(o + b.size - 1).transpose();
            acc += R * (Q.transpose() * S0 * Q.conjugate()) * R.adjoint();
        }
        o += b.size;
    }
    return acc.real() / (fact * fact * (2.0 * kappa - 1.0));
}

Covariances asymptotic_covariances(const ValidatedModel& model, const Eigen::VectorXd& x0,
                                   const SpectralProfile& profile, Regime regime) {
    Covariances cov;
    cov.sigma0 = sigma0_at(model, x0);
    const Eigen::MatrixXd& A = model.spec().A;
    const int s = model.s();
    const bool scalar = s == 1 && model.d() == 1;
    const double a = scalar ? A(0, 0) : 0.0;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(s, s);

    switch (regime) {
        case Regime::Diffusive: {
            const Eigen::MatrixXd S1 = solve_lyapunov(profile.J - 0.5 * I, cov.sigma0);
            cov.sigma1 = S1;
            cov.clt_variance = A * S1 * A.transpose();
            if (scalar) cov.lil_constant = std::fabs(a) * std::sqrt(cov.sigma0(0, 0) / (1.0 - 2.0 * profile.tau));
            break;
        }
        case Regime::Critical: {
            if (profile.kappa == 1 && profile.right.cols() > 0) {
                const Eigen::MatrixXcd Pr = profile.right * profile.left.transpose();
                const Eigen::MatrixXcd S2 = Pr * cov.sigma0.cast<cd>() * Pr.adjoint();
                cov.sigma2 = S2.real();
                cov.clt_variance = A * S2.real() * A.transpose();
                cov.sigma2_status = "eigenvector-projector";
            } else {
                cov.sigma2_status = "unavailable-numerically";
            }
            if (scalar) cov.lil_constant = std::fabs(a) * std::sqrt(cov.sigma0(0, 0));
            break;
        }
        case Regime::Supercritical:
            if (scalar) cov.residual_variance = a * a * cov.sigma0(0, 0) / (2.0 * profile.tau - 1.0);
            break;
        case Regime::Unsupported: break;
    }
    return cov;
}

// ---------------------------------------------------------------- expansion

std::vector<Partition> enumerate_partitions(int i, int t) {
    std::vector<Partition> out;
    if (i < 1 || t < i) return out;
    std::vector<int> cur;
    double ifact = 1.0;
    for (int k = 2; k <= i; ++k) ifact *= k;
    auto rec = [&](auto&& self, int remaining_parts, int remaining_sum, int min_part) -> void {
        if (remaining_parts == 0) {
            if (remaining_sum != 0) return;
            Partition p;
            p.parts = cur;
            double denom = 1.0;
            for (std::size_t a = 0; a < cur.size();) {
                std::size_t b = a;
                while (b < cur.size() && cur[b] == cur[a]) ++b;
                for (std::size_t k = 2; k <= b - a; ++k) denom *= static_cast<double>(k);
                a = b;
            }
            p.nu = ifact / denom;
            out.push_back(std::move(p));
            return;
        }
        // each remaining part is at least `part`
        for (int part = min_part; part * remaining_parts <= remaining_sum; ++part) {
            cur.push_back(part);
            self(self, remaining_parts - 1, remaining_sum - part, part);
            cur.pop_back();
        }
    };
    rec(rec, i, t, 1);
    return out;
}

std::vector<double> expansion_coeffs(const std::vector<double>& derivs, double tau, int m, ExpansionScale scale,
                                     double A) {
    if (std::fabs(1.0 - tau) < 1e-12) throw Error(ErrorCode::TauEqualsOne, "expansion recursion divides by 1 - tau");
    if (m < 0) m = 0;
    if (static_cast<int>(derivs.size()) < m)
        throw Error(ErrorCode::ConfigInvalid, "expansion needs derivatives of order 2.." + std::to_string(m + 1));
    std::vector<double> c(static_cast<std::size_t>(m) + 2, 0.0);  // 1-based
    c[1] = 1.0;
    for (int j = 1; j <= m; ++j) {
        double total = 0.0;
        double ifact = 1.0;
        for (int i = 2; i <= j + 1; ++i) {
            ifact *= i;
            double denom = ifact;
            if (scale == ExpansionScale::Observed1D) denom *= std::pow(A, i - 1);
            double inner = 0.0;
            for (const auto& p : enumerate_partitions(i, j + 1)) {
                double prod = p.nu;
                for (int part : p.parts) prod *= c[part];
                inner += prod;
            }
            total += derivs[i - 2] / denom * inner;
        }
        c[j + 1] = -total / (j * (1.0 - tau));
    }
    return {c.begin() + 1, c.end()};
}

int m0_of_tau(double tau) {
    if (!(tau > 0.5 && tau < 1.0)) return -1;
    return static_cast<int>(std::floor((tau - 0.5) / (1.0 - tau) + 1e-12));
}

// ---------------------------------------------------------------- report

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

nlohmann::json RegimeReport::to_json() const {
    nlohmann::json j;
    j["x0"] = vector_json(x0);
    j["limit"] = vector_json(limit);
    j["regime"] = to_string(regime);
    j["tau"] = tau;
    j["kappa"] = kappa;
    j["exact_tau"] = exact_tau;
    j["top_eigenvalue_complex"] = top_complex;
    nlohmann::json eig = nlohmann::json::array();
    for (std::size_t i = 0; i < eigenvalues.size(); ++i)
        eig.push_back({{"re", eigenvalues[i].real()}, {"im", eigenvalues[i].imag()}, {"blocks", blocks[i]}});
    j["eigenvalues"] = eig;
    if (eta1) j["eta1"] = *eta1;
    j["Sigma0"] = matrix_json(cov.sigma0);
    if (cov.sigma1) j["Sigma1"] = matrix_json(*cov.sigma1);
    if (cov.sigma2) j["Sigma2"] = matrix_json(*cov.sigma2);
    j["Sigma2_status"] = cov.sigma2_status;
    if (cov.clt_variance) j["clt_variance"] = matrix_json(*cov.clt_variance);
    if (cov.lil_constant) j["lil_constant"] = *cov.lil_constant;
    if (cov.residual_variance) j["residual_variance"] = *cov.residual_variance;
    j["m0"] = m0;
    j["beta"] = beta;
    j["b"] = b;
    j["downcrossing"] = {{"status", downcrossing.verified ? "verified-on-grid" : "violated"},
                         {"max", downcrossing.max_value},
                         {"argmax", downcrossing.argmax},
                         {"points", downcrossing.points}};
    j["notes"] = notes;
    j["provenance"] = {{"grid_density", grid_density},
                       {"regime_tol", kRegimeTol},
                       {"cluster_tol", cluster_tol},
                       {"fixed_point_tol", 1e-13}};
    return j;
}

RegimeReport classify(const ValidatedModel& model, const ClassifyOptions& opts) {
    RegimeReport rep;
    rep.grid_density = opts.grid_density;
    const ModelSpec& spec = model.spec();
    rep.x0 = find_fixed_point(model);
    rep.limit = spec.A * rep.x0 + spec.b;
    rep.downcrossing = check_downcrossing(model, rep.x0, opts.grid_density);
    if (!rep.downcrossing.verified) rep.notes.push_back("downcrossing condition violated on the grid");
    else rep.notes.push_back("downcrossing verified on the grid only");

    SpectralProfile prof = profile_of_jacobian(model.jacobian(rep.x0));
    if (const auto q = exact_tau(spec)) {
        prof.exact_tau = true;
        prof.tau_rational = q;
        prof.tau = static_cast<double>(q->first) / static_cast<double>(q->second);
    }
    rep.tau = prof.tau;
    rep.kappa = prof.kappa;
    rep.exact_tau = prof.exact_tau;
    rep.top_complex = prof.jordan.top_complex;
    rep.cluster_tol = prof.jordan.cluster_tol;
    for (const auto& c : prof.jordan.clusters) {
        rep.eigenvalues.push_back(c.value);
        rep.blocks.push_back(c.blocks);
    }
    if (prof.exact_tau) {
        const auto [num, den] = *prof.tau_rational;
        if (2 * num >= 2 * den) rep.regime = Regime::Unsupported;
        else if (2 * num < den) rep.regime = Regime::Diffusive;
        else if (2 * num == den) rep.regime = Regime::Critical;
        else rep.regime = Regime::Supercritical;
    } else {
        rep.regime = regime_of_tau(rep.tau);
    }
    if (rep.regime == Regime::Unsupported) {
        rep.notes.push_back("tau >= 1: the boundary case is an open problem; no limit constants reported");
        rep.cov.sigma0 = sigma0_at(model, rep.x0);
        return rep;
    }
    rep.cov = asymptotic_covariances(model, rep.x0, prof, rep.regime);

    if (spec.s == 1) {
        if (auto h2 = model.H_derivative_1d(rep.x0(0), 2)) rep.eta1 = *h2;
    }
    if (rep.regime == Regime::Supercritical) {
        rep.m0 = m0_of_tau(rep.tau);
        if (rep.top_complex)
            rep.notes.push_back("complex top eigenvalue: oscillatory factor exp(i Im(lambda) log n) not estimated");
        if (spec.s == 1) {
            int m = opts.expansion_m >= 0 ? opts.expansion_m : std::max(rep.m0, 1);
            m = std::min(m, 5);
            std::vector<double> derivs;
            for (int i = 2; i <= m + 1; ++i) {
                const auto v = model.H_derivative_1d(rep.x0(0), i);
                if (!v) {
                    rep.notes.push_back("derivative of order " + std::to_string(i) +
                                        " unavailable; expansion truncated at " + std::to_string(i - 1) + " terms");
                    break;
                }
                derivs.push_back(*v);
            }
            const int m_used = static_cast<int>(derivs.size());
            rep.b = expansion_coeffs(derivs, rep.tau, m_used, ExpansionScale::Auxiliary);
            if (spec.d == 1) rep.beta = expansion_coeffs(derivs, rep.tau, m_used, ExpansionScale::Observed1D, spec.A(0, 0));
        }
    }
    if (rep.regime == Regime::Critical && rep.kappa > 1)
        rep.notes.push_back("kappa > 1 at the critical line: Sigma2 needs exact block data");
    return rep;
}

}  // namespace erwlab

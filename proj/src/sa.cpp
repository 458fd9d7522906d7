#include "erwlab/sa.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "erwlab/error.hpp"
#include "erwlab/rng.hpp"
#include "erwlab/stats.hpp"

namespace erwlab {

std::string NoiseSpec::to_string() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::None: return "none";
        case Kind::Gaussian: os << "gaussian:" << scale; break;
        case Kind::Rademacher: os << "rademacher:" << scale; break;
    }
    return os.str();
}

NoiseSpec NoiseSpec::parse(const std::string& text) {
    NoiseSpec spec;
    if (text == "none") {
        spec.kind = Kind::None;
        spec.scale = 0.0;
        return spec;
    }
    const auto colon = text.find(':');
    const std::string family = text.substr(0, colon);
    if (family == "gaussian") spec.kind = Kind::Gaussian;
    else if (family == "rademacher") spec.kind = Kind::Rademacher;
    else throw Error(ErrorCode::ConfigInvalid, "unknown noise family '" + family + "'");
    if (colon != std::string::npos) {
        try {
            std::size_t used = 0;
            spec.scale = std::stod(text.substr(colon + 1), &used);
            if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigInvalid, "bad noise scale in '" + text + "'");
        }
    }
    if (!(spec.scale >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "noise scale must be nonnegative");
    return spec;
}

SAProcess make_sa_process(const FuncExpr& drift, double theta0, const NoiseSpec& noise, double theta1,
                          int max_order) {
    if (drift.arity() != 1) throw Error(ErrorCode::ConfigInvalid, "drift must be a function of x");
    const double at_root = drift(theta0);
    if (!(std::fabs(at_root) <= 1e-12))
        throw Error(ErrorCode::ConfigInvalid, "drift(theta0) = " + std::to_string(at_root) + " is not zero");
    SAProcess proc;
    proc.drift = drift;
    proc.theta0 = theta0;
    proc.noise = noise;
    proc.theta1 = theta1;
    for (int order = 1; order <= max_order; ++order) {
        try {
            proc.derivs.push_back(derive_at(drift, theta0, order).value);
        } catch (const Error& e) {
            if (order == 1) throw Error(ErrorCode::ConfigInvalid, std::string("drift not differentiable at theta0: ") + e.what());
            break;
        }
    }
    if (!(proc.derivs[0] > 0.0)) throw Error(ErrorCode::ConfigInvalid, "drift'(theta0) must be positive");
    return proc;
}

namespace {

/// Checkpoint closest to n on a log scale.
std::size_t nearest_index(const std::vector<long>& cps, long n) {
    const double target = std::log(static_cast<double>(std::max(1L, n)));
    auto dist = [&](std::size_t c) { return std::fabs(std::log(static_cast<double>(cps[c])) - target); };
    std::size_t best = 0;
    for (std::size_t c = 1; c < cps.size(); ++c)
        if (dist(c) < dist(best)) best = c;
    return best;
}

std::vector<long> sorted_checkpoints(std::vector<long> cps, long n_max) {
    if (cps.empty()) return default_checkpoints(n_max);
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    if (cps.front() < 1 || cps.back() > n_max) throw Error(ErrorCode::ConfigInvalid, "checkpoints must lie in [1, n_max]");
    return cps;
}

double noise_draw(const NoiseSpec& noise, std::uint64_t key, long n) {
    switch (noise.kind) {
        case NoiseSpec::Kind::None: return 0.0;
        case NoiseSpec::Kind::Gaussian: return noise.scale * Philox::normal(key, static_cast<std::uint64_t>(n));
        case NoiseSpec::Kind::Rademacher:
            return Philox::uniforms(key, static_cast<std::uint64_t>(n), 1)[0] < 0.5 ? -noise.scale : noise.scale;
    }
    return 0.0;
}

}  // namespace

SAPath run_sa(const SAProcess& proc, long n_max, std::uint64_t key, const std::vector<long>& checkpoints) {
    if (n_max < 1) throw Error(ErrorCode::ConfigInvalid, "n_max must be >= 1");
    SAPath path;
    path.checkpoints = sorted_checkpoints(checkpoints, n_max);
    path.theta.reserve(path.checkpoints.size());
    double theta = proc.theta1;
    std::size_t ci = 0;
    for (long n = 1;; ++n) {
        if (ci < path.checkpoints.size() && path.checkpoints[ci] == n) {
            path.theta.push_back(theta);
            ++ci;
        }
        if (n >= n_max) break;
        const double a = proc.step_size ? proc.step_size(n) : 1.0 / static_cast<double>(n + 1);
        theta -= a * (proc.drift(theta) + noise_draw(proc.noise, key, n));
        if (!(std::fabs(theta) <= 1e9))
            throw Error(ErrorCode::DivergenceGuard, "|Theta| exceeded 1e9 at n=" + std::to_string(n + 1));
    }
    return path;
}

SAEnsemble sa_ensemble(const SAProcess& proc, long n_max, int N, std::uint64_t master_seed,
                       std::vector<long> checkpoints, int threads) {
    if (N < 2) throw Error(ErrorCode::ConfigInvalid, "ensemble needs N >= 2");
    SAEnsemble ens;
    ens.N = N;
    ens.checkpoints = sorted_checkpoints(std::move(checkpoints), n_max);
    std::vector<SAPath> paths(static_cast<std::size_t>(N));
    parallel_for(paths.size(), threads,
                 [&](std::size_t i) { paths[i] = run_sa(proc, n_max, trajectory_key(master_seed, i), ens.checkpoints); });
    ens.theta.assign(ens.checkpoints.size(), std::vector<double>(static_cast<std::size_t>(N)));
    for (std::size_t c = 0; c < ens.checkpoints.size(); ++c)
        for (int i = 0; i < N; ++i) ens.theta[c][i] = paths[i].theta[c];
    return ens;
}

// ---------------------------------------------------------------- GERW reduction

GerwSA::GerwSA(ValidatedModel model) : model_(std::move(model)) {
    if (model_.s() != 1) return;
    const auto& spec = model_.spec();
    const int r = model_.r();
    std::string H, rest = "1";
    for (int i = 0; i < r; ++i) {
        const double m = model_.block_mu(i)(0);
        std::ostringstream term;
        term.precision(17);
        if (i < r - 1) {
            term << "(" << spec.prob_maps[i].to_string() << ")*(" << m << ")";
            rest += " - (" + spec.prob_maps[i].to_string() + ")";
        } else {
            term << "(" << rest << ")*(" << m << ")";
        }
        H += (i ? " + " : "") + term.str();
    }
    drift_1d_ = FuncExpr::parse("x - (" + H + ")", 1);
}

Eigen::VectorXd GerwSA::gamma(const Eigen::VectorXd& x) const { return x - model_.H(x); }

double GerwSA::sigma2(const Eigen::VectorXd& x) const { return Sigma(x).trace(); }

Eigen::MatrixXd GerwSA::Sigma(const Eigen::VectorXd& x) const {
    const auto P = model_.all_probs(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(model_.s(), model_.s());
    Eigen::VectorXd H = Eigen::VectorXd::Zero(model_.s());
    for (int i = 0; i < model_.r(); ++i) {
        S += P[i] * model_.block_second_moment(i);
        H += P[i] * model_.block_mu(i);
    }
    return S - H * H.transpose();
}

double GerwSA::noise_bound() const { return model_.mu().norm() + model_.max_atom_norm(); }

GerwSA gerw_to_sa(const ValidatedModel& model) { return GerwSA(model); }

SAPath run_gerw_sa(const GerwSA& sa, long n_max, std::uint64_t key, const std::vector<long>& checkpoints) {
    if (sa.model().s() != 1) throw Error(ErrorCode::UnsupportedModel, "the SA path runner covers s = 1");
    FunctionalConfig cfg;
    cfg.retain_aux = true;
    SAPath path;
    path.checkpoints = sorted_checkpoints(checkpoints, n_max);
    path.theta = trajectory(sa.model(), n_max, key, path.checkpoints, cfg).aux;
    return path;
}

double max_noise_norm(const GerwSA& sa, long n_max, std::uint64_t key) {
    const auto& model = sa.model();
    WalkState st = initial_state(model, key);
    std::vector<double> inc(model.s()), x(model.s());
    double worst = 0.0;
    while (st.n < n_max) {
        for (int j = 0; j < model.s(); ++j) x[j] = st.S_tilde[j] / static_cast<double>(st.n);
        const Eigen::VectorXd H = model.H(std::span<const double>(x));
        step(st, model, &inc);
        double e2 = 0.0;
        for (int j = 0; j < model.s(); ++j) e2 += (H(j) - inc[j]) * (H(j) - inc[j]);
        worst = std::max(worst, std::sqrt(e2));
    }
    return worst;
}

VerificationReport noise_moment_check(const EnsembleStats& stats, const NoiseCheckOptions& opts) {
    const NoiseBins& nb = stats.noise;
    if (nb.count.empty()) throw Error(ErrorCode::InsufficientBinCounts, "ensemble was run without noise tracking");
    VerificationReport rep;
    rep.tag = TheoremTag::NoiseMoments;
    rep.N = stats.N;
    rep.n = stats.checkpoints.back();
    rep.criterion = "per bin |mean e| <= z SE and |mean(|e|^2 - sigma^2(x))| <= z SE; Lindeberg average nonincreasing";
    rep.pass = true;
    nlohmann::json bins = nlohmann::json::array();
    int used = 0;
    for (int b = 0; b < nb.bins; ++b) {
        const double cnt = nb.count[b];
        if (cnt < opts.min_count) continue;
        ++used;
        const double me = nb.sum_e[b] / cnt;
        const double se_e = std::sqrt(std::max(0.0, nb.sum_e2[b] / cnt - me * me) / cnt);
        const double md = nb.sum_dev[b] / cnt;
        const double se_d = std::sqrt(std::max(0.0, nb.sum_dev2[b] / cnt - md * md) / cnt);
        const double width = (nb.hi - nb.lo) / nb.bins;
        const bool ok_e = std::fabs(me) <= opts.z * se_e;
        const bool ok_d = std::fabs(md) <= opts.z * se_d;
        rep.statistic.insert(rep.statistic.end(), {me, md});
        rep.predicted.insert(rep.predicted.end(), {0.0, 0.0});
        rep.tolerance.insert(rep.tolerance.end(), {opts.z * se_e, opts.z * se_d});
        bins.push_back({{"lo", nb.lo + b * width},
                        {"hi", nb.lo + (b + 1) * width},
                        {"count", cnt},
                        {"mean_e", me},
                        {"second_moment", (nb.sum_dev[b] + nb.sum_sigma2[b]) / cnt},
                        {"sigma2", nb.sum_sigma2[b] / cnt},
                        {"pass", ok_e && ok_d}});
        if (!(ok_e && ok_d)) rep.pass = false;
    }
    if (used == 0)
        throw Error(ErrorCode::InsufficientBinCounts,
                    "no bin reached " + std::to_string(static_cast<long>(opts.min_count)) + " observations");
    rep.extra["bins"] = bins;

    // Lindeberg: tail sum / n over the upper half of the checkpoints
    std::vector<double> lind;
    for (std::size_t c = 0; c < stats.checkpoints.size(); ++c)
        lind.push_back(stats.lindeberg.empty() ? 0.0 : stats.lindeberg[c] / static_cast<double>(stats.checkpoints[c]));
    bool trend = true;
    for (std::size_t c = lind.size() / 2 + 1; c < lind.size(); ++c)
        if (lind[c] > lind[c - 1] * (1.0 + 1e-12) + 1e-300) trend = false;
    rep.extra["lindeberg"] = lind;
    rep.extra["lindeberg_nonincreasing"] = trend;
    if (!trend) rep.pass = false;
    return rep;
}

// ---------------------------------------------------------------- expansion

std::vector<double> sa_expansion_coeffs(const std::vector<double>& derivs, int k) {
    if (k < 1) return {};
    if (static_cast<int>(derivs.size()) < k)
        throw Error(ErrorCode::ConfigInvalid, "need drift derivatives of order 1.." + std::to_string(k));
    const double slope = derivs[0];
    std::vector<double> b(static_cast<std::size_t>(k) + 1, 0.0);
    b[1] = 1.0;
    // ordered compositions of t into i positive parts; each multiset appears nu times
    std::vector<int> parts;
    for (int t = 2; t <= k; ++t) {
        double total = 0.0, ifact = 1.0;
        for (int i = 2; i <= t; ++i) {
            ifact *= i;
            double inner = 0.0;
            parts.assign(static_cast<std::size_t>(i), 1);
            parts[0] = t - i + 1;
            for (;;) {
                double prod = 1.0;
                for (int c : parts) prod *= b[c];
                inner += prod;
                // next composition: move one unit rightwards in lexicographic order
                int j = i - 2;
                while (j >= 0 && parts[j] == 1) --j;
                if (j < 0) break;
                --parts[j];
                int tail = 0;
                for (int q = j + 1; q < i; ++q) tail += parts[q];
                ++tail;
                for (int q = j + 1; q < i; ++q) parts[q] = 1;
                parts[j + 1] = tail - (i - j - 2);
            }
            total += derivs[i - 1] / ifact * inner;
        }
        b[t] = total / (slope * (t - 1));
    }
    return {b.begin() + 1, b.end()};
}

double invert_expansion(const std::vector<double>& b, double delta) {
    double u = delta;
    for (int it = 0; it < 100; ++it) {
        double f = -delta, df = 0.0, pw = 1.0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            df += (j + 1) * b[j] * pw;
            pw *= u;
            f += b[j] * pw;
        }
        if (df == 0.0) break;
        const double step = f / df;
        u -= step;
        if (std::fabs(step) <= 1e-15 * std::max(1.0, std::fabs(u))) break;
    }
    return u;
}

std::vector<double> estimate_Z(const SAEnsemble& ens, const SAProcess& proc, const std::vector<double>& b) {
    const double n = static_cast<double>(ens.checkpoints.back());
    const double scale = std::pow(n, proc.slope());
    std::vector<double> Z(ens.N);
    for (int i = 0; i < ens.N; ++i) Z[i] = invert_expansion(b, ens.theta.back()[i] - proc.theta0) * scale;
    return Z;
}

VerificationReport sa_fluctuation_check(const SAEnsemble& ens, const SAProcess& proc, double rel_tol,
                                        double cauchy_threshold) {
    if (!proc.standard_step()) throw Error(ErrorCode::ConfigInvalid, "theorem checks assume a_n = 1/(n+1)");
    VerificationReport rep;
    rep.tag = TheoremTag::CLT;
    rep.N = ens.N;
    const long n_max = ens.checkpoints.back();
    rep.n = n_max;
    const double nd = static_cast<double>(n_max);
    const double g = proc.slope();
    const double s2 = proc.noise.variance();
    const auto& last = ens.theta.back();
    rep.extra["drift_slope"] = g;
    if (std::fabs(g - 0.5) <= 1e-9 || g > 0.5) {
        const bool critical = std::fabs(g - 0.5) <= 1e-9;
        const double scale = critical ? std::sqrt(nd / std::log(nd)) : std::sqrt(nd);
        std::vector<double> z(ens.N);
        for (int i = 0; i < ens.N; ++i) z[i] = scale * (last[i] - proc.theta0);
        const double v = stats::variance(z);
        const double pred = critical ? s2 : s2 / (2.0 * g - 1.0);
        rep.statistic = {v};
        rep.predicted = {pred};
        rep.tolerance = {rel_tol};
        rep.criterion = critical ? "|var(sqrt(n / log n)(Theta_n - theta0)) / predicted - 1| <= tolerance"
                                 : "|var(sqrt(n)(Theta_n - theta0)) / predicted - 1| <= tolerance";
        rep.pass = pred > 0.0 && std::fabs(v / pred - 1.0) <= rel_tol;
        if (critical) rep.notes.push_back("logarithmic scaling converges slowly");
    } else {
        const std::size_t c10 = nearest_index(ens.checkpoints, n_max / 10);
        const double sN = std::pow(nd, g), s10 = std::pow(static_cast<double>(ens.checkpoints[c10]), g);
        std::vector<double> D(ens.N), gap(ens.N);
        for (int i = 0; i < ens.N; ++i) {
            D[i] = sN * (last[i] - proc.theta0);
            gap[i] = std::fabs(D[i] - s10 * (ens.theta[c10][i] - proc.theta0));
        }
        const double spread = stats::iqr(D);
        const double stat = spread > 0.0 ? stats::median(gap) / spread : 0.0;
        rep.statistic = {stat};
        rep.predicted = {0.0};
        rep.tolerance = {cauchy_threshold};
        rep.criterion = "median |D(n_max) - D(n_max/10)| / IQR(D(n_max)) <= tolerance, D(n) = n^slope (Theta_n - theta0)";
        rep.pass = stat <= cauchy_threshold;
        rep.extra["n_early"] = ens.checkpoints[c10];
    }
    return rep;
}

VerificationReport sa_expansion_check(const SAEnsemble& ens, const SAProcess& proc, int k,
                                      const SAExpansionOptions& opts) {
    if (!proc.standard_step()) throw Error(ErrorCode::ConfigInvalid, "theorem checks assume a_n = 1/(n+1)");
    const double g = proc.slope();
    if (k < 1 || !(g > 0.0 && g < 0.5))
        throw Error(ErrorCode::WrongDerivativeRegime, "expansion needs 0 < drift'(theta0) < 1/2");
    const double upper = 1.0 / (2.0 * k), lower = 1.0 / (2.0 * (k + 1));
    if (g > upper + 1e-12)
        throw Error(ErrorCode::WrongDerivativeRegime,
                    "drift'(theta0) = " + std::to_string(g) + " exceeds 1/(2k) for k = " + std::to_string(k));
    const int terms = opts.terms > 0 ? opts.terms : k;
    const auto b = sa_expansion_coeffs(proc.derivs, terms);
    const auto Z = estimate_Z(ens, proc, b);
    const long n_max = ens.checkpoints.back();

    auto residual = [&](std::size_t c, int i) {
        const double u = Z[i] / std::pow(static_cast<double>(ens.checkpoints[c]), g);
        double r = ens.theta[c][i] - proc.theta0, pw = u;
        for (double bj : b) {
            r -= bj * pw;
            pw *= u;
        }
        return r;
    };

    VerificationReport rep;
    rep.tag = TheoremTag::SAExpansion;
    rep.N = ens.N;
    rep.extra["k"] = k;
    rep.extra["terms"] = terms;
    rep.extra["b"] = b;
    rep.extra["Z_quantiles"] = {stats::quantile(Z, 0.05), stats::median(Z), stats::quantile(Z, 0.95)};
    if (g > lower) {
        const std::size_t c = nearest_index(ens.checkpoints, opts.n_eval > 0 ? opts.n_eval : std::max(1L, n_max / 1000));
        const double n = static_cast<double>(ens.checkpoints[c]);
        std::vector<double> z(ens.N);
        for (int i = 0; i < ens.N; ++i) z[i] = std::sqrt(n) * residual(c, i);
        const double v = stats::variance(z);
        const double pred = proc.noise.variance() / (1.0 - 2.0 * g);
        rep.n = ens.checkpoints[c];
        rep.statistic = {v};
        rep.predicted = {pred};
        rep.tolerance = {opts.rel_tol};
        rep.criterion = "|var(sqrt(n) r(n)) / predicted - 1| <= tolerance";
        rep.pass = pred > 0.0 && std::fabs(v / pred - 1.0) <= opts.rel_tol;
        rep.notes.push_back("Z estimated at n_max: expected downward bias factor 1 - (n/n_max)^(1 - 2 slope) = " +
                            std::to_string(1.0 - std::pow(n / static_cast<double>(n_max), 1.0 - 2.0 * g)));
        if (std::fabs(g - upper) <= 1e-12) rep.notes.push_back("boundary slope 1/(2k): slow convergence expected");
    } else {
        std::vector<double> logn, logr;
        for (std::size_t c = 0; c + 1 < ens.checkpoints.size(); ++c) {
            if (10 * ens.checkpoints[c] < n_max) continue;
            std::vector<double> r(ens.N);
            for (int i = 0; i < ens.N; ++i) r[i] = std::fabs(residual(c, i));
            logn.push_back(std::log(static_cast<double>(ens.checkpoints[c])));
            logr.push_back(std::log(stats::median(r)));
        }
        if (logn.size() < 2) throw Error(ErrorCode::ConfigInvalid, "slope check needs two checkpoints in the top decade");
        const double slope = stats::ols_slope(logn, logr);
        rep.n = n_max;
        rep.statistic = {slope};
        rep.predicted = {-(k + 1) * g};
        rep.tolerance = {opts.slope_tol};
        rep.criterion = "fitted slope of log median |r(n)| <= predicted + tolerance";
        rep.pass = slope <= -(k + 1) * g + opts.slope_tol;
    }
    return rep;
}

}  // namespace erwlab

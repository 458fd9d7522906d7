#include "erwlab/verify.hpp"

#include <algorithm>
#include <cmath>

#include "erwlab/error.hpp"
#include "erwlab/stats.hpp"

namespace erwlab {

const char* to_string(TheoremTag tag) {
    switch (tag) {
        case TheoremTag::SLLN: return "SLLN";
        case TheoremTag::CLT: return "CLT";
        case TheoremTag::LilEnvelope: return "LIL-envelope";
        case TheoremTag::SupercriticalLimit: return "SupercriticalLimit";
        case TheoremTag::ExpansionResidual: return "ExpansionResidual";
        case TheoremTag::Recurrence: return "Recurrence";
        case TheoremTag::NoiseMoments: return "NoiseMoments";
        case TheoremTag::SAExpansion: return "SAExpansion";
    }
    return "unknown";
}

nlohmann::json VerificationReport::to_json() const {
    return {{"theorem", to_string(tag)}, {"pass", pass},          {"statistic", statistic},
            {"predicted", predicted},    {"tolerance", tolerance}, {"criterion", criterion},
            {"N", N},                    {"n", n},                 {"notes", notes},
            {"extra", extra}};
}

std::size_t nearest_checkpoint(const EnsembleStats& stats, long n) {
    std::size_t best = 0;
    const double target = std::log(static_cast<double>(std::max(1L, n)));
    auto dist = [&](std::size_t c) { return std::fabs(std::log(static_cast<double>(stats.checkpoints[c])) - target); };
    for (std::size_t c = 1; c < stats.checkpoints.size(); ++c)
        if (dist(c) < dist(best)) best = c;
    return best;
}

VerificationReport slln_test(const EnsembleStats& stats, const Eigen::VectorXd& predicted, double z,
                             const std::optional<Eigen::MatrixXd>& clt_variance) {
    VerificationReport rep;
    rep.tag = TheoremTag::SLLN;
    rep.N = stats.N;
    const auto& last = stats.summary.back();
    rep.n = last.n;
    rep.criterion = "|mean - predicted| <= tolerance, tolerance = z SE + sqrt(clt_var) / sqrt(n)";
    rep.pass = true;
    for (int k = 0; k < stats.d; ++k) {
        const double allowance = clt_variance ? std::sqrt(std::max(0.0, (*clt_variance)(k, k)) / last.n) : 0.0;
        const double tol = z * last.se(k) + allowance;
        rep.statistic.push_back(last.mean(k));
        rep.predicted.push_back(predicted(k));
        rep.tolerance.push_back(tol);
        if (!(std::fabs(last.mean(k) - predicted(k)) <= tol)) rep.pass = false;
    }
    rep.extra["z"] = z;
    if (!clt_variance) rep.notes.push_back("no CLT variance: drift allowance omitted");
    return rep;
}

namespace {

double scaled_variance_factor(const RegimeReport& report, double n) {
    if (report.regime == Regime::Critical) return 1.0 / std::pow(std::log(n), 2.0 * report.kappa - 1.0);
    return 1.0;
}

void require_fluct_regime(const RegimeReport& report) {
    if (report.regime != Regime::Diffusive && report.regime != Regime::Critical)
        throw Error(ErrorCode::WrongRegime, std::string("fluctuation test needs Diffusive or Critical, got ") +
                                                to_string(report.regime));
    if (!report.cov.clt_variance)
        throw Error(ErrorCode::WrongRegime, "no predicted covariance for this regime (" + report.cov.sigma2_status + ")");
}

}  // namespace

VerificationReport fluctuation_test(const EnsembleStats& stats, const RegimeReport& report,
                                    const FluctuationOptions& opts) {
    require_fluct_regime(report);
    VerificationReport rep;
    rep.tag = TheoremTag::CLT;
    rep.N = stats.N;
    const auto& last = stats.summary.back();
    rep.n = last.n;
    const double tol = opts.rel_tol.value_or(report.regime == Regime::Diffusive ? 0.05 : 0.12);
    const Eigen::MatrixXd emp = last.cov * scaled_variance_factor(report, static_cast<double>(last.n));
    const Eigen::MatrixXd& pred = *report.cov.clt_variance;
    double rel;
    if (stats.d == 1) {
        rel = std::fabs(emp(0, 0) / pred(0, 0) - 1.0);
        rep.criterion = "|var / predicted - 1| <= tol and KS p-value >= alpha";
        rep.statistic.push_back(emp(0, 0));
        rep.predicted.push_back(pred(0, 0));
    } else {
        rel = (emp - pred).norm() / pred.norm();
        rep.criterion = "||cov - predicted||_F / ||predicted||_F <= tol";
        for (Eigen::Index i = 0; i < emp.size(); ++i) {
            rep.statistic.push_back(emp.data()[i]);
            rep.predicted.push_back(pred.data()[i]);
        }
    }
    rep.tolerance.push_back(tol);
    rep.extra["relative_error"] = rel;
    rep.pass = rel <= tol;
    if (stats.d == 1) {
        if (stats.N >= opts.min_ks_samples) {
            const auto ks = stats::ks_normal(stats.values.back());
            rep.extra["ks_statistic"] = ks.statistic;
            rep.extra["ks_p_value"] = ks.p_value;
            rep.extra["alpha"] = opts.alpha;
            rep.pass = rep.pass && ks.p_value >= opts.alpha;
        } else {
            rep.notes.push_back("KS skipped: needs N >= " + std::to_string(opts.min_ks_samples));
        }
    }
    if (report.regime == Regime::Critical) rep.notes.push_back("critical scaling converges at a logarithmic rate");
    return rep;
}

VerificationReport fluctuation_test(const ExactLaw1D& law, const RegimeReport& report, double rel_tol) {
    require_fluct_regime(report);
    VerificationReport rep;
    rep.tag = TheoremTag::CLT;
    rep.n = law.n;
    const double n = law.n;
    const double emp = law.var_S / n * scaled_variance_factor(report, n);
    const double pred = (*report.cov.clt_variance)(0, 0);
    rep.statistic = {emp};
    rep.predicted = {pred};
    rep.tolerance = {rel_tol};
    rep.criterion = "|exact scaled variance / predicted - 1| <= tol";
    rep.extra["exact_variance"] = law.var_S;
    rep.pass = std::fabs(emp / pred - 1.0) <= rel_tol;
    rep.notes.push_back("exact law: no sampling error");
    return rep;
}

VerificationReport lil_envelope_test(const std::vector<double>& maxima, const RegimeReport& report, double lo,
                                     double hi, double min_fraction) {
    if (report.regime != Regime::Diffusive && report.regime != Regime::Critical)
        throw Error(ErrorCode::WrongRegime, "LIL envelope needs Diffusive or Critical");
    if (!report.cov.lil_constant) throw Error(ErrorCode::WrongRegime, "no LIL constant (needs s = d = 1)");
    VerificationReport rep;
    rep.tag = TheoremTag::LilEnvelope;
    rep.N = static_cast<int>(maxima.size());
    const double c = *report.cov.lil_constant;
    std::size_t inside = 0, zero = 0;
    std::vector<double> ratios;
    for (double m : maxima) {
        const double q = m / c;
        ratios.push_back(q);
        if (m == 0.0) ++zero;
        if (q >= lo && q <= hi) ++inside;
    }
    const double frac = maxima.empty() ? 0.0 : static_cast<double>(inside) / maxima.size();
    rep.statistic = {frac};
    rep.predicted = {min_fraction};
    rep.tolerance = {lo, hi};
    rep.criterion = "fraction of M / lil_constant in [lo, hi] >= predicted (property check, not a quantitative limit)";
    rep.pass = frac >= min_fraction;
    rep.extra["lil_constant"] = c;
    rep.extra["ratio_quantiles"] = {stats::quantile(ratios, 0.05), stats::quantile(ratios, 0.25), stats::median(ratios),
                                    stats::quantile(ratios, 0.75), stats::quantile(ratios, 0.95)};
    rep.extra["below"] = std::count_if(ratios.begin(), ratios.end(), [&](double q) { return q < lo; });
    rep.extra["above"] = std::count_if(ratios.begin(), ratios.end(), [&](double q) { return q > hi; });
    if (!maxima.empty() && zero == maxima.size()) {
        rep.pass = false;
        rep.notes.push_back("degenerate input: every running maximum is zero");
    }
    return rep;
}

namespace {

double d_scale(const RegimeReport& report, double n) {
    double f = std::pow(n, 1.0 - report.tau);
    if (report.kappa > 1) f /= std::pow(std::log(n), report.kappa - 1.0);
    return f;
}

}  // namespace

VerificationReport supercritical_limit_test(const EnsembleStats& stats, const RegimeReport& report,
                                            std::vector<double>* L_hat, double threshold) {
    if (report.regime != Regime::Supercritical) throw Error(ErrorCode::WrongRegime, "needs the Supercritical regime");
    if (report.top_complex)
        throw Error(ErrorCode::ComplexTopEigenvalue, "oscillatory limits are reported, not tested");
    VerificationReport rep;
    rep.tag = TheoremTag::SupercriticalLimit;
    rep.N = stats.N;
    const std::size_t cN = stats.checkpoints.size() - 1;
    const long n_max = stats.checkpoints[cN];
    const std::size_t c10 = nearest_checkpoint(stats, n_max / 10);
    rep.n = n_max;
    const double sN = d_scale(report, static_cast<double>(n_max));
    const double s10 = d_scale(report, static_cast<double>(stats.checkpoints[c10]));
    rep.pass = true;
    for (int k = 0; k < stats.d; ++k) {
        std::vector<double> dN(stats.N), gap(stats.N);
        for (int i = 0; i < stats.N; ++i) {
            const double a = sN * (stats.values[cN][static_cast<std::size_t>(i) * stats.d + k] - report.limit(k));
            const double b = s10 * (stats.values[c10][static_cast<std::size_t>(i) * stats.d + k] - report.limit(k));
            dN[i] = a;
            gap[i] = std::fabs(a - b);
        }
        const double spread = stats::iqr(dN);
        const double stat = spread > 0.0 ? stats::median(gap) / spread : std::numeric_limits<double>::infinity();
        const bool degenerate = spread == 0.0 && stats::median(gap) == 0.0;
        rep.statistic.push_back(degenerate ? 0.0 : stat);
        rep.predicted.push_back(0.0);
        rep.tolerance.push_back(threshold);
        if (!(degenerate || stat <= threshold)) rep.pass = false;
        if (k == 0) {
            if (L_hat) *L_hat = dN;
            rep.extra["L_quantiles"] = {stats::quantile(dN, 0.05), stats::quantile(dN, 0.25), stats::median(dN),
                                        stats::quantile(dN, 0.75), stats::quantile(dN, 0.95)};
            rep.extra["L_mean"] = stats::mean(dN);
            rep.extra["L_sd"] = std::sqrt(stats::variance(dN));
        }
        if (degenerate) rep.notes.push_back("degenerate: D(n) identically zero");
    }
    rep.extra["n_early"] = stats.checkpoints[c10];
    rep.criterion = "median |D(n_max) - D(n_max/10)| / IQR(D(n_max)) <= tolerance";
    rep.notes.push_back("law of L is descriptive only");
    return rep;
}

VerificationReport expansion_residual_test(const EnsembleStats& stats, const RegimeReport& report,
                                           const std::vector<double>& L_hat, const ExpansionOptions& opts) {
    if (report.regime != Regime::Supercritical || stats.d != 1)
        throw Error(ErrorCode::WrongRegime, "expansion residual needs a supercritical 1D walk");
    if (static_cast<int>(L_hat.size()) != stats.N)
        throw Error(ErrorCode::MissingLEstimates, "need one L estimate per trajectory");
    if (report.beta.empty()) throw Error(ErrorCode::MissingLEstimates, "report carries no expansion coefficients");
    VerificationReport rep;
    rep.tag = TheoremTag::ExpansionResidual;
    rep.N = stats.N;
    const int avail = static_cast<int>(report.beta.size()) - 1;
    const int m = opts.m >= 0 ? std::min(opts.m, avail) : avail;
    const int m0 = report.m0;
    const int terms = std::min(m, m0);
    const double s0 = report.limit(0);
    const long n_max = stats.checkpoints.back();

    auto residual = [&](std::size_t c, int i) {
        const double n = static_cast<double>(stats.checkpoints[c]);
        const double u = L_hat[i] / std::pow(n, 1.0 - report.tau);
        double r = stats.values[c][i] - s0;
        double pw = u;
        for (int j = 0; j <= terms; ++j) {
            r -= report.beta[j] * pw;
            pw *= u;
        }
        return r;
    };

    rep.extra["m"] = m;
    rep.extra["m0"] = m0;
    if (m >= m0) {
        if (!report.cov.residual_variance) throw Error(ErrorCode::WrongRegime, "no residual variance for this model");
        const std::size_t c = nearest_checkpoint(stats, opts.n_eval > 0 ? opts.n_eval : std::max(1L, n_max / 1000));
        const double n = static_cast<double>(stats.checkpoints[c]);
        std::vector<double> z(stats.N);
        for (int i = 0; i < stats.N; ++i) z[i] = std::sqrt(n) * residual(c, i);
        const double v = stats::variance(z);
        const double pred = *report.cov.residual_variance;
        rep.n = stats.checkpoints[c];
        rep.statistic = {v};
        rep.predicted = {pred};
        rep.tolerance = {opts.rel_tol};
        rep.criterion = "|var(sqrt(n) r(n)) / predicted - 1| <= tolerance";
        rep.pass = std::fabs(v / pred - 1.0) <= opts.rel_tol;
        const double ratio = n / static_cast<double>(n_max);
        rep.notes.push_back("L estimated at n_max: expected downward bias factor 1 - (n/n_max)^(2 tau - 1) = " +
                            std::to_string(1.0 - std::pow(ratio, 2.0 * report.tau - 1.0)));
    } else {
        std::vector<double> logn, logr;
        for (std::size_t c = 0; c + 1 < stats.checkpoints.size(); ++c) {
            if (10 * stats.checkpoints[c] < n_max) continue;
            std::vector<double> r(stats.N);
            for (int i = 0; i < stats.N; ++i) r[i] = std::fabs(residual(c, i));
            logn.push_back(std::log(static_cast<double>(stats.checkpoints[c])));
            logr.push_back(std::log(stats::median(r)));
        }
        if (logn.size() < 2) throw Error(ErrorCode::ConfigInvalid, "slope check needs two checkpoints in the top decade");
        const double slope = stats::ols_slope(logn, logr);
        const double bound = -(1.0 - report.tau) * (m + 1) + 0.1;
        rep.n = n_max;
        rep.statistic = {slope};
        rep.predicted = {-(1.0 - report.tau) * (m + 1)};
        rep.tolerance = {0.1};
        rep.criterion = "fitted slope of log median |r(n)| <= predicted + tolerance";
        rep.pass = slope <= bound;
    }
    return rep;
}

VerificationReport recurrence_report(const EnsembleStats& stats, const RegimeReport& report) {
    if (stats.returns.empty()) throw Error(ErrorCode::NonLatticeModel, "returns were not tracked (needs a d = 1 lattice walk)");
    VerificationReport rep;
    rep.tag = TheoremTag::Recurrence;
    rep.N = stats.N;
    const long n_max = stats.checkpoints.back();
    rep.n = n_max;
    const double s0 = report.limit(0);
    std::size_t late = 0;
    std::vector<double> counts, last;
    for (int i = 0; i < stats.N; ++i) {
        if (stats.returns_late[i] > 0) ++late;
        counts.push_back(static_cast<double>(stats.returns[i]));
        last.push_back(static_cast<double>(stats.last_return[i]));
    }
    const double frac_late = static_cast<double>(late) / stats.N;
    rep.extra["return_count_quantiles"] = {stats::quantile(counts, 0.1), stats::median(counts), stats::quantile(counts, 0.9)};
    rep.extra["last_return_quantiles"] = {stats::quantile(last, 0.1), stats::median(last), stats::quantile(last, 0.9)};
    rep.extra["N0"] = n_max / 10;
    rep.notes.push_back("qualitative: recurrence is a tail event and cannot be decided at finite n");
    if (std::fabs(s0) > 1e-9) {
        rep.statistic = {1.0 - frac_late};
        rep.predicted = {0.99};
        rep.tolerance = {0.0};
        rep.criterion = "fraction with no return after N0 >= predicted";
        rep.pass = 1.0 - frac_late >= 0.99;
    } else if (report.regime == Regime::Diffusive || report.regime == Regime::Critical) {
        rep.statistic = {frac_late};
        rep.predicted = {0.95};
        rep.tolerance = {0.0};
        rep.criterion = "fraction with a return after N0 >= predicted";
        rep.pass = frac_late >= 0.95;
    } else {
        rep.statistic = {frac_late};
        rep.criterion = "descriptive";
        rep.pass = true;
        rep.notes.push_back("conjecture-region: descriptive only");
    }
    return rep;
}

}  // namespace erwlab

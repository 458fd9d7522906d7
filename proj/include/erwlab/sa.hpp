#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "erwlab/func_expr.hpp"
#include "erwlab/model.hpp"
#include "erwlab/simulate.hpp"
#include "erwlab/verify.hpp"

namespace erwlab {

/// Conditional law of the noise given Theta; i.i.d. in this engine.
struct NoiseSpec {
    enum class Kind { None, Gaussian, Rademacher };
    Kind kind = Kind::Gaussian;
    double scale = 1.0;  // standard deviation

    double variance() const { return kind == Kind::None ? 0.0 : scale * scale; }
    bool moment_bound() const { return true; }  // both families have all moments
    std::string to_string() const;

    /// "none", "gaussian:<sd>" or "rademacher:<sd>". Throws ConfigInvalid.
    static NoiseSpec parse(const std::string& text);
};

struct SAProcess {
    FuncExpr drift;
    double theta0 = 0.0;
    NoiseSpec noise;
    double theta1 = 0.0;
    std::vector<double> derivs;  // derivs[i-1] = drift^(i)(theta0), as far as available
    std::function<double(long)> step_size;  // empty: a_n = 1 / (n + 1)

    double slope() const { return derivs.at(0); }
    bool standard_step() const { return !step_size; }
};

/// Validates drift(theta0) = 0 within 1e-12 and drift'(theta0) > 0, then registers
/// derivatives up to max_order (stops at the first nonsmooth order). Throws ConfigInvalid.
SAProcess make_sa_process(const FuncExpr& drift, double theta0, const NoiseSpec& noise, double theta1 = 0.0,
                          int max_order = 4);

struct SAPath {
    std::vector<long> checkpoints;
    std::vector<double> theta;
};

/// Theta_{n+1} = Theta_n - a_n (drift(Theta_n) + eps_{n+1}), Theta_1 = theta1.
/// eps_{n+1} uses Philox counter n. Throws DivergenceGuard when |Theta| > 1e9.
SAPath run_sa(const SAProcess& proc, long n_max, std::uint64_t key, const std::vector<long>& checkpoints);

struct SAEnsemble {
    std::vector<long> checkpoints;
    int N = 0;
    std::vector<std::vector<double>> theta;  // theta[c][i]
};

SAEnsemble sa_ensemble(const SAProcess& proc, long n_max, int N, std::uint64_t master_seed,
                       std::vector<long> checkpoints, int threads = 0);

/// The scaled auxiliary walk seen as a stochastic approximation process with drift x - H(x).
class GerwSA {
public:
    explicit GerwSA(ValidatedModel model);

    Eigen::VectorXd gamma(const Eigen::VectorXd& x) const;
    /// E(|e|^2 | Gamma = x) = sum_i P_i tr Sigma^(pi_i) - |H|^2
    double sigma2(const Eigen::VectorXd& x) const;
    /// E(e e^T | Gamma = x) = sum_i P_i Sigma^(pi_i) - H H^T
    Eigen::MatrixXd Sigma(const Eigen::VectorXd& x) const;
    /// Drift as an expression (s = 1 only; empty otherwise).
    const FuncExpr& drift_1d() const { return drift_1d_; }
    /// |mu| + max |Y|: almost-sure bound on the noise for bounded step laws.
    double noise_bound() const;
    const ValidatedModel& model() const { return model_; }

private:
    ValidatedModel model_;
    FuncExpr drift_1d_;
};

GerwSA gerw_to_sa(const ValidatedModel& model);

/// Gamma path at checkpoints: the auxiliary walk over n from simulate (s = 1).
SAPath run_gerw_sa(const GerwSA& sa, long n_max, std::uint64_t key, const std::vector<long>& checkpoints);

/// Largest |e_{n+1}| along one path with n >= 1.
double max_noise_norm(const GerwSA& sa, long n_max, std::uint64_t key);

struct NoiseCheckOptions {
    double z = 3.0;
    double min_count = 1000.0;
};

/// Binned conditional mean and second moment of e from an ensemble run with cfg.noise, plus the
/// Lindeberg trend. Throws InsufficientBinCounts when no bin reaches min_count.
VerificationReport noise_moment_check(const EnsembleStats& stats, const NoiseCheckOptions& opts = {});

/// b_1 .. b_k from derivs[i-1] = drift^(i)(theta0). Throws ConfigInvalid when derivatives are missing.
std::vector<double> sa_expansion_coeffs(const std::vector<double>& derivs, int k);

/// Solves sum_j b_j u^j = delta for u near delta (Newton); returns u.
double invert_expansion(const std::vector<double>& b, double delta);

/// Per-path Z estimates from the terminal value: Z = u n_max^slope with the expansion inverted.
std::vector<double> estimate_Z(const SAEnsemble& ens, const SAProcess& proc, const std::vector<double>& b);

/// Fluctuation check by slope regime: slope > 1/2 variance s^2/(2 slope - 1) of sqrt(n) (Theta_n - theta0);
/// slope = 1/2 variance s^2 of sqrt(n / log n)(...); slope < 1/2 Cauchy statistic of n^slope (Theta_n - theta0).
VerificationReport sa_fluctuation_check(const SAEnsemble& ens, const SAProcess& proc, double rel_tol = 0.05,
                                        double cauchy_threshold = 0.15);

struct SAExpansionOptions {
    int terms = -1;       // coefficients subtracted; -1 uses k
    long n_eval = 0;      // variance branch checkpoint; 0 picks about n_max / 1000
    double rel_tol = 0.15;
    double slope_tol = 0.1;
};

/// Expansion of order k. Variance branch for 1/(2(k+1)) < slope <= 1/(2k), slope branch below.
/// Throws WrongDerivativeRegime otherwise.
VerificationReport sa_expansion_check(const SAEnsemble& ens, const SAProcess& proc, int k,
                                      const SAExpansionOptions& opts = {});

}  // namespace erwlab

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "erwlab/oracle.hpp"
#include "erwlab/simulate.hpp"
#include "erwlab/theory.hpp"

namespace erwlab {

enum class TheoremTag { SLLN, CLT, LilEnvelope, SupercriticalLimit, ExpansionResidual, Recurrence, NoiseMoments, SAExpansion };
const char* to_string(TheoremTag tag);

/// Self-contained verdict: pass is recomputable from statistic, predicted and tolerance.
struct VerificationReport {
    TheoremTag tag = TheoremTag::SLLN;
    bool pass = false;
    std::vector<double> statistic;
    std::vector<double> predicted;
    std::vector<double> tolerance;
    std::string criterion;  // how pass is decided
    int N = 0;
    long n = 0;
    std::vector<std::string> notes;
    nlohmann::json extra = nlohmann::json::object();

    nlohmann::json to_json() const;
};

/// |mean - predicted| <= z SE + c / sqrt(n) per component, c from the CLT variance when given.
VerificationReport slln_test(const EnsembleStats& stats, const Eigen::VectorXd& predicted, double z = 4.0,
                             const std::optional<Eigen::MatrixXd>& clt_variance = std::nullopt);

struct FluctuationOptions {
    double alpha = 0.01;
    std::optional<double> rel_tol;  // default 0.05 diffusive, 0.12 critical
    int min_ks_samples = 5000;
};

/// Variance check at the last checkpoint (relative for d = 1, Frobenius-relative for d > 1) plus KS for d = 1.
/// Throws WrongRegime outside Diffusive/Critical.
VerificationReport fluctuation_test(const EnsembleStats& stats, const RegimeReport& report,
                                    const FluctuationOptions& opts = {});

/// Same variance check on an exact law (no sampling error).
VerificationReport fluctuation_test(const ExactLaw1D& law, const RegimeReport& report, double rel_tol);

/// Fraction of M / lil_constant inside [lo, hi] must reach min_fraction.
VerificationReport lil_envelope_test(const std::vector<double>& maxima, const RegimeReport& report, double lo = 0.3,
                                     double hi = 1.8, double min_fraction = 0.9);

/// Cauchy criterion on D(n) = n^(1-tau) / (log n)^(kappa-1) (S_n/n - limit). Fills L_hat (component 0).
VerificationReport supercritical_limit_test(const EnsembleStats& stats, const RegimeReport& report,
                                            std::vector<double>* L_hat = nullptr, double threshold = 0.15);

struct ExpansionOptions {
    int m = -1;           // expansion order; -1 uses every available coefficient
    long n_eval = 0;      // checkpoint for the variance branch; 0 picks about n_max / 1000
    double rel_tol = 0.15;
};

/// Residual after subtracting the expansion with estimated L. Throws MissingLEstimates.
VerificationReport expansion_residual_test(const EnsembleStats& stats, const RegimeReport& report,
                                           const std::vector<double>& L_hat, const ExpansionOptions& opts = {});

/// Qualitative return counts. Throws NonLatticeModel when returns were not tracked.
VerificationReport recurrence_report(const EnsembleStats& stats, const RegimeReport& report);

/// Recorded checkpoint closest to n on a log scale.
std::size_t nearest_checkpoint(const EnsembleStats& stats, long n);

}  // namespace erwlab

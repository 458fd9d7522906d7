#pragma once

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "erwlab/linalg.hpp"
#include "erwlab/model.hpp"

namespace erwlab {

enum class Regime { Diffusive, Critical, Supercritical, Unsupported };
const char* to_string(Regime r);

constexpr double kRegimeTol = 1e-9;
Regime regime_of_tau(double tau, double tol = kRegimeTol);

/// Solves H(x) = x. Throws NoRootInDomain or MultipleRoots.
Eigen::VectorXd find_fixed_point(const ValidatedModel& model);

struct DowncrossingResult {
    bool verified = false;  // max < 0 on the grid
    double max_value = 0.0;
    std::vector<double> argmax;
    std::size_t points = 0;
};

/// Max of (x - x0)^T (H(x) - x) over the grid, skipping a 1e-6 ball around x0.
DowncrossingResult check_downcrossing(const ValidatedModel& model, const Eigen::VectorXd& x0, int grid_density = 201);

struct SpectralProfile {
    Eigen::MatrixXd J;
    JordanProfile jordan;
    double tau = 0.0;
    int kappa = 1;
    bool exact_tau = false;  // tau taken from preset parameters as an exact rational
    std::optional<std::pair<long long, long long>> tau_rational;
    // kappa == 1 only: eigenvectors at Re lambda = tau with Q^T R = I
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;
};

/// Profile of an arbitrary matrix; never throws.
SpectralProfile profile_of_jacobian(const Eigen::MatrixXd& J);

/// Throws TauAtLeastOne or JacobianNonsmooth.
SpectralProfile spectral_profile(const ValidatedModel& model, const Eigen::VectorXd& x0);

/// tau as an exact rational for presets whose Jacobian is a closed form in decimal parameters.
std::optional<std::pair<long long, long long>> exact_tau(const ModelSpec& spec);

struct Covariances {
    Eigen::MatrixXd sigma0;
    std::optional<Eigen::MatrixXd> sigma1;  // diffusive
    std::optional<Eigen::MatrixXd> sigma2;  // critical
    std::optional<Eigen::MatrixXd> clt_variance;  // observed scale
    std::optional<double> lil_constant;           // s == d == 1
    std::optional<double> residual_variance;      // supercritical 1D: A^2 Sigma0 / (2 tau - 1)
    std::string sigma2_status = "not-applicable";
};

Eigen::MatrixXd sigma0_at(const ValidatedModel& model, const Eigen::VectorXd& x0);

Covariances asymptotic_covariances(const ValidatedModel& model, const Eigen::VectorXd& x0,
                                   const SpectralProfile& profile, Regime regime);

/// One Jordan block of a synthetic decomposition J = P diag(blocks) P^-1.
struct JordanBlockSpec {
    std::complex<double> value;
    int size = 1;
};

/// Critical limit from exact block data: sum over blocks with Re = 1/2 and size kappa of
/// R Q^T Sigma0 conj(Q) R^H / (((kappa-1)!)^2 (2 kappa - 1)), R = first and Q = last basis column.
Eigen::MatrixXd sigma2_from_jordan(const Eigen::MatrixXcd& P, const std::vector<JordanBlockSpec>& blocks,
                                   const Eigen::MatrixXd& sigma0);

struct Partition {
    std::vector<int> parts;  // nondecreasing, positive
    double nu = 1.0;         // number of distinct orderings
};

std::vector<Partition> enumerate_partitions(int i, int t);

enum class ExpansionScale { Observed1D, Auxiliary };

/// derivs[k] holds the order-(k+2) derivative, k = 0..m-1. Returns coefficients 1..m+1.
/// Observed scale divides order-i terms by A^(i-1) i!. Throws TauEqualsOne.
std::vector<double> expansion_coeffs(const std::vector<double>& derivs, double tau, int m, ExpansionScale scale,
                                     double A = 2.0);

/// floor((tau - 1/2) / (1 - tau)); -1 outside (1/2, 1).
int m0_of_tau(double tau);

struct RegimeReport {
    Eigen::VectorXd x0;
    Eigen::VectorXd limit;  // A x0 + b
    Regime regime = Regime::Unsupported;
    double tau = 0.0;
    int kappa = 1;
    bool exact_tau = false;
    bool top_complex = false;
    std::vector<std::complex<double>> eigenvalues;
    std::vector<std::vector<int>> blocks;
    std::optional<double> eta1;
    Covariances cov;
    int m0 = -1;
    std::vector<double> beta;  // observed scale (1D)
    std::vector<double> b;     // auxiliary scale
    DowncrossingResult downcrossing;
    std::vector<std::string> notes;
    int grid_density = 201;
    double cluster_tol = 0.0;

    nlohmann::json to_json() const;
};

struct ClassifyOptions {
    int grid_density = 201;
    int expansion_m = -1;  // -1: max(m0, 1), capped by available derivatives
};

RegimeReport classify(const ValidatedModel& model, const ClassifyOptions& opts = {});

}  // namespace erwlab

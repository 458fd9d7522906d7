#pragma once

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "erwlab/error.hpp"
#include "erwlab/func_expr.hpp"

namespace erwlab {

/// Axis-aligned rectangle, optionally cut by sum(x) <= sum_max.
struct Domain {
    std::vector<double> lower;
    std::vector<double> upper;  // +inf allowed
    double clip = 10.0;         // grid span used on unbounded axes
    std::optional<double> sum_max;

    static Domain unit_box(int s);
    bool contains(std::span<const double> x, double tol = 1e-12) const;
    /// Finite upper edge used by grids.
    double grid_upper(int axis) const;
};

/// One scalar factor of a product step law.
struct ScalarLaw {
    enum class Family { Constant, BernoulliScaled, DiscreteUniform, GeometricTruncated };
    Family family = Family::Constant;
    double value = 1.0;  // Constant / BernoulliScaled magnitude
    double prob = 1.0;   // BernoulliScaled / GeometricTruncated success probability
    int lo = 0, hi = 0;  // DiscreteUniform bounds
    int max = 1;         // GeometricTruncated support 1..max

    std::vector<std::pair<double, double>> atoms() const;  // (value, probability)
};

struct StepLaw {
    enum class Kind { PointMass, FiniteSupport, Product };
    Kind kind = Kind::PointMass;
    std::vector<ScalarLaw> factors;  // Product only
    // Joint atoms; Product laws are expanded here.
    std::vector<std::vector<double>> atoms;
    std::vector<double> probs;

    static StepLaw point_mass(std::vector<double> value);
    static StepLaw finite_support(std::vector<std::vector<double>> atoms, std::vector<double> probs);
    static StepLaw product(std::vector<ScalarLaw> factors);

    int dim() const { return atoms.empty() ? 0 : static_cast<int>(atoms.front().size()); }
    Eigen::VectorXd mean() const;
    Eigen::MatrixXd second_moment() const;
};

/// Law of the first auxiliary increment.
struct InitialLaw {
    std::vector<std::vector<double>> atoms;
    std::vector<double> probs;
};

/// Closed-form derivatives a preset registers for one probability map.
struct DerivativeOverride {
    std::vector<FuncExpr> gradient;  // d P / d x_j, arity s
    std::vector<FuncExpr> higher;    // s == 1: P'', P''', ...
    bool higher_complete = false;    // derivatives past `higher` vanish
};

struct ModelSpec {
    std::string name = "custom";
    std::map<std::string, std::string> params;  // preset parameters as given
    int s = 1;
    int d = 1;
    int r = 2;
    std::vector<std::vector<int>> partition;  // zero-based coordinates per block
    StepLaw step_law;
    std::vector<FuncExpr> prob_maps;  // r-1 maps, arity s
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    InitialLaw initial;
    Domain domain;
    std::vector<DerivativeOverride> overrides;  // empty or r-1 entries
};

struct ValidationIssue {
    ErrorCode code;
    std::string message;
    std::vector<double> point;  // offending grid point when applicable
};

struct ValidationResult;

/// Immutable validated model with cached moments.
class ValidatedModel {
public:
    const ModelSpec& spec() const { return impl_->spec; }
    int s() const { return impl_->spec.s; }
    int d() const { return impl_->spec.d; }
    int r() const { return impl_->spec.r; }

    const Eigen::VectorXd& mu() const { return impl_->mu; }
    const Eigen::MatrixXd& second_moment() const { return impl_->sigma; }
    /// mu restricted to block i (zero outside the block).
    const Eigen::VectorXd& block_mu(int i) const { return impl_->block_mu[i]; }
    const Eigen::MatrixXd& block_second_moment(int i) const { return impl_->block_sigma[i]; }

    /// P_1..P_{r-1} at x (no domain check; hot path).
    void probs(std::span<const double> x, std::span<double> out) const;
    /// Full vector P_1..P_r at x with the domain check.
    std::vector<double> all_probs(std::span<const double> x) const;

    /// Drift map H(x) = sum_i P_i(x) mu^(pi_i). Throws DomainViolation.
    Eigen::VectorXd H(std::span<const double> x) const;
    Eigen::VectorXd H(const Eigen::VectorXd& x) const;

    /// Derivative of P_i (i < r-1) along x_j; uses overrides when registered.
    Derivative prob_partial(int i, int j, std::span<const double> x) const;
    /// s == 1 only: order-k derivative of P_i. Empty when unavailable.
    std::optional<Derivative> prob_derivative_1d(int i, double x, int order) const;
    /// Jacobian of H at x. Throws JacobianNonsmooth.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
    /// s == 1 only: H^(k)(x). Empty when unavailable (nonsmooth or order > 6 without override).
    std::optional<double> H_derivative_1d(double x, int order) const;

    /// Largest step atom norm, used by noise bounds.
    double max_atom_norm() const { return impl_->max_atom_norm; }
    /// True when all atoms, A and b are integers and d == 1.
    bool integer_lattice() const { return impl_->lattice; }

    struct Impl {
        ModelSpec spec;
        Eigen::VectorXd mu;
        Eigen::MatrixXd sigma;
        std::vector<Eigen::VectorXd> block_mu;
        std::vector<Eigen::MatrixXd> block_sigma;
        double max_atom_norm = 0.0;
        bool lattice = false;
    };

private:
    friend ValidationResult validate_model(const ModelSpec&, int);
    explicit ValidatedModel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

struct ValidationResult {
    std::optional<ValidatedModel> model;
    std::vector<ValidationIssue> issues;  // at most kMaxIssues recorded
    std::size_t violation_count = 0;      // total, including unrecorded ones
    bool ok() const { return model.has_value(); }
    std::string summary() const;

    static constexpr std::size_t kMaxIssues = 256;
};

ValidationResult validate_model(const ModelSpec& spec, int grid_density = 201);

/// validate_model that throws the first issue as an Error.
ValidatedModel require_valid(const ModelSpec& spec, int grid_density = 201);

/// Grid over the (clipped) domain: min(density, floor(cap^(1/s))) points per axis,
/// points outside the sum constraint dropped.
std::vector<std::vector<double>> domain_grid(const Domain& dom, int density, std::size_t cap = 100000);

// ------------------------------------------------------------ 1D memory functions

enum class FuncRole { F, G, H };

struct Func1D {
    FuncExpr expr;
    FuncRole role = FuncRole::F;
    std::optional<double> memory_p;  // set when role == H
};

/// h(x) = (1-p) + (2p-1) f(x)
Func1D h_from_f(const Func1D& f, double p);
/// g(x) = 2 f((x+1)/2) - 1
Func1D g_from_f(const Func1D& f);
/// f(x) = (1 + g(2x-1)) / 2
Func1D f_from_g(const Func1D& g);
/// (1-f, 1-p); induces the same h.
std::pair<Func1D, double> dual(const Func1D& f, double p);

/// Grid check f(x) + f(1-x) = 1 within tol.
bool is_symmetric(const Func1D& f, int grid = 201, double tol = 1e-12);
/// Grid check g(-x) = -g(x) within tol.
bool is_odd(const Func1D& g, int grid = 201, double tol = 1e-12);
/// Grid check of the range: [0,1] for f and h, [-1,1] for g.
bool range_ok(const Func1D& fn, int grid = 201);

}  // namespace erwlab

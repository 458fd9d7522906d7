#pragma once

#include <vector>

#include <Eigen/Dense>

#include "erwlab/model.hpp"

namespace erwlab {

/// Law of the 1D auxiliary count V_n and the observed S_n = A V_n + n b.
struct ExactLaw1D {
    int n = 0;
    std::vector<double> pmf;  // P(V_n = k), k = 0..n
    double A = 1.0, b = 0.0;
    double mean_S = 0.0, var_S = 0.0;
};

/// Sparse law of S_tilde_n.
struct SparseLaw {
    int n = 0;
    std::vector<std::vector<double>> points;  // sorted lexicographically
    std::vector<double> probs;
};

struct ExactMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Neumaier-compensated running sum.
struct CompensatedSum {
    double sum = 0.0, comp = 0.0;
    void add(double x);
    double value() const { return sum + comp; }
};

constexpr int kMaxDpSteps = 2000;
constexpr double kMaxPaths = 1e7;

/// Forward DP over V_n. Needs s == 1, unit point-mass steps and an initial law on {0, 1}.
/// Throws UnsupportedModel or ConfigInvalid (n outside 1..2000).
ExactLaw1D exact_dp_1d(const ValidatedModel& model, int n);

/// Exhaustive path summation, n <= 12. Throws TooManyPaths when
/// initial_atoms * (r * atoms)^(n-1) exceeds 1e7.
SparseLaw enumerate_small_multi(const ValidatedModel& model, int n);

ExactMoments exact_moments(const ExactLaw1D& law);
ExactMoments exact_moments(const SparseLaw& law, const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace erwlab

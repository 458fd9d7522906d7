#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace erwlab {

struct EigenCluster {
    std::complex<double> value;  // cluster mean
    int multiplicity = 0;
    std::vector<int> blocks;     // Jordan block sizes, descending
};

struct JordanProfile {
    std::vector<EigenCluster> clusters;  // sorted by real part, descending
    double tau = 0.0;                    // max real part
    int kappa = 1;                       // largest block among clusters at tau
    bool top_complex = false;            // a cluster at tau has nonzero imaginary part
    double cluster_tol = 0.0;            // tolerance that produced a consistent structure
    bool consistent = true;              // block sizes matched multiplicities
};

/// Numerical rank: singular values above tol.
int numerical_rank(const Eigen::MatrixXcd& M, double tol);

/// Orthonormal basis of the numerical null space (columns).
Eigen::MatrixXcd null_space(const Eigen::MatrixXcd& M, double tol);

/// Eigenvalues clustered with a tolerance grown from 1e-7 until block counts from
/// rank gaps add up; never throws.
JordanProfile jordan_profile(const Eigen::MatrixXd& J);

/// Solves M X + X M^T = -Q through the Kronecker system. Throws LyapunovSingular.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& M, const Eigen::MatrixXd& Q);

/// Spectral projector onto the eigenspace of a semisimple eigenvalue.
Eigen::MatrixXcd eigen_projector(const Eigen::MatrixXd& J, std::complex<double> lambda, double tol);

}  // namespace erwlab

#include "erwlab/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "erwlab/error.hpp"

namespace erwlab {

int numerical_rank(const Eigen::MatrixXcd& M, double tol) {
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const auto& sv = svd.singularValues();
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++r;
    return r;
}

Eigen::MatrixXcd null_space(const Eigen::MatrixXcd& M, double tol) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++r;
    return svd.matrixV().rightCols(M.cols() - r);
}

namespace {

using cd = std::complex<double>;

std::vector<std::vector<cd>> cluster(const std::vector<cd>& eig, double tol) {
    // single linkage
    const std::size_t n = eig.size();
    std::vector<int> label(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] >= 0) continue;
        label[i] = next;
        std::vector<std::size_t> stack{i};
        while (!stack.empty()) {
            const std::size_t a = stack.back();
            stack.pop_back();
            for (std::size_t b = 0; b < n; ++b)
                if (label[b] < 0 && std::abs(eig[a] - eig[b]) <= tol) {
                    label[b] = next;
                    stack.push_back(b);
                }
        }
        ++next;
    }
    std::vector<std::vector<cd>> out(next);
    for (std::size_t i = 0; i < n; ++i) out[label[i]].push_back(eig[i]);
    return out;
}

/// Block sizes from rank gaps; returns false when they do not add up to m.
bool block_sizes(const Eigen::MatrixXcd& J, cd lambda, int m, std::vector<int>& blocks) {
    const Eigen::Index s = J.rows();
    const Eigen::MatrixXcd B = J - lambda * Eigen::MatrixXcd::Identity(s, s);
    std::vector<int> rank{static_cast<int>(s)};
    Eigen::MatrixXcd power = Eigen::MatrixXcd::Identity(s, s);
    for (int k = 1; k <= m + 1; ++k) {
        power = power * B;
        // only the m smallest singular values may belong to the generalized kernel
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(power);
        const auto& sv = svd.singularValues();
        int nullity = 0;
        for (Eigen::Index i = 0; i < s; ++i)
            if (sv(i) <= 1e-9 * std::max(1.0, sv(0))) ++nullity;
        rank.push_back(static_cast<int>(s) - nullity);
    }
    // at_least[k] = number of blocks of size >= k
    std::vector<int> at_least(m + 3, 0);
    for (int k = 1; k <= m + 1; ++k) at_least[k] = rank[k - 1] - rank[k];
    blocks.clear();
    int total = 0;
    for (int k = m + 1; k >= 1; --k) {
        const int exact = at_least[k] - at_least[k + 1];
        if (exact < 0) return false;
        for (int c = 0; c < exact; ++c) blocks.push_back(k);
        total += exact * k;
    }
    return total == m && at_least[m + 1] == 0;
}

}  // namespace

JordanProfile jordan_profile(const Eigen::MatrixXd& J) {
    JordanProfile prof;
    const Eigen::Index s = J.rows();
    if (s == 0) return prof;
    Eigen::EigenSolver<Eigen::MatrixXd> es(J, false);
    std::vector<cd> eig(es.eigenvalues().data(), es.eigenvalues().data() + s);
    const Eigen::MatrixXcd Jc = J.cast<cd>();
    double radius = 1.0;
    for (const cd& v : eig) radius = std::max(radius, std::abs(v));

    std::vector<EigenCluster> best;
    bool ok = false;
    double tol = 1e-2;
    for (; tol >= 0.9999e-7; tol /= 10.0) {
        best.clear();
        ok = true;
        for (const auto& members : cluster(eig, tol * radius)) {
            cd mean = 0.0;
            for (const cd& v : members) mean += v;
            mean /= static_cast<double>(members.size());
            EigenCluster c;
            c.value = mean;
            c.multiplicity = static_cast<int>(members.size());
            if (!block_sizes(Jc, mean, c.multiplicity, c.blocks)) {
                ok = false;
                c.blocks.assign(c.multiplicity, 1);
            }
            best.push_back(std::move(c));
        }
        if (ok) break;
    }
    if (!ok) {
        // fall back to the tightest clustering, reported as semisimple
        tol = 1e-7;
        best.clear();
        for (const auto& members : cluster(eig, tol * radius)) {
            cd mean = 0.0;
            for (const cd& v : members) mean += v;
            mean /= static_cast<double>(members.size());
            best.push_back({mean, static_cast<int>(members.size()), std::vector<int>(members.size(), 1)});
        }
    }
    std::sort(best.begin(), best.end(), [](const EigenCluster& a, const EigenCluster& b) {
        if (a.value.real() != b.value.real()) return a.value.real() > b.value.real();
        return a.value.imag() > b.value.imag();
    });
    prof.clusters = std::move(best);
    prof.cluster_tol = ok ? tol : 1e-7;
    prof.consistent = ok;
    prof.tau = prof.clusters.front().value.real();
    prof.kappa = 1;
    const double top_tol = prof.cluster_tol * radius;
    for (const auto& c : prof.clusters) {
        if (std::fabs(c.value.real() - prof.tau) > top_tol) continue;
        prof.kappa = std::max(prof.kappa, c.blocks.front());
        if (std::fabs(c.value.imag()) > top_tol) prof.top_complex = true;
    }
    return prof;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& M, const Eigen::MatrixXd& Q) {
    const Eigen::Index s = M.rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(s, s);
    Eigen::MatrixXd K(s * s, s * s);
    // vec(M X) = (I kron M) vec X, vec(X M^T) = (M kron I) vec X
    for (Eigen::Index i = 0; i < s; ++i)
        for (Eigen::Index j = 0; j < s; ++j) K.block(i * s, j * s, s, s) = I(i, j) * M + M(i, j) * I;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible())
        throw Error(ErrorCode::LyapunovSingular, "Lyapunov operator is singular (eigenvalues of M sum to zero)");
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), s * s);
    Eigen::VectorXd x = lu.solve(rhs);
    Eigen::MatrixXd X = Eigen::Map<Eigen::MatrixXd>(x.data(), s, s);
    return 0.5 * (X + X.transpose());
}

Eigen::MatrixXcd eigen_projector(const Eigen::MatrixXd& J, std::complex<double> lambda, double tol) {
    const Eigen::Index s = J.rows();
    const Eigen::MatrixXcd B = J.cast<cd>() - lambda * Eigen::MatrixXcd::Identity(s, s);
    const Eigen::MatrixXcd V = null_space(B, tol);
    const Eigen::MatrixXcd W = null_space(B.adjoint(), tol);
    if (V.cols() == 0 || V.cols() != W.cols()) return Eigen::MatrixXcd::Zero(s, s);
    const Eigen::MatrixXcd G = W.adjoint() * V;
    return V * G.fullPivLu().solve(W.adjoint());
}

}  // namespace erwlab

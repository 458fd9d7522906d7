#include "erwlab/oracle.hpp"

#include <cmath>
#include <map>
#include <string>

#include "erwlab/error.hpp"

namespace erwlab {

void CompensatedSum::add(double x) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) comp += (sum - t) + x;
    else comp += (x - t) + sum;
    sum = t;
}

ExactLaw1D exact_dp_1d(const ValidatedModel& model, int n) {
    const ModelSpec& spec = model.spec();
    if (n < 1 || n > kMaxDpSteps)
        throw Error(ErrorCode::ConfigInvalid, "exact DP supports 1 <= n <= " + std::to_string(kMaxDpSteps));
    const bool unit = spec.s == 1 && spec.d == 1 && spec.r == 2 && spec.step_law.atoms.size() == 1 &&
                      spec.step_law.atoms[0].size() == 1 && spec.step_law.atoms[0][0] == 1.0;
    if (!unit) throw Error(ErrorCode::UnsupportedModel, "exact DP needs s = 1 with unit point-mass steps");
    double p_one = 0.0;
    for (std::size_t a = 0; a < spec.initial.atoms.size(); ++a) {
        const double v = spec.initial.atoms[a][0];
        if (v == 1.0) p_one += spec.initial.probs[a];
        else if (v != 0.0) throw Error(ErrorCode::UnsupportedModel, "exact DP needs the first step on {0, 1}");
    }

    std::vector<CompensatedSum> cur(2), next;
    cur[0].add(1.0 - p_one);
    cur[1].add(p_one);
    for (int t = 1; t < n; ++t) {
        next.assign(static_cast<std::size_t>(t) + 2, CompensatedSum{});
        double P[1];
        for (int k = 0; k <= t; ++k) {
            const double mass = cur[k].value();
            if (mass == 0.0) continue;
            const double x[1] = {static_cast<double>(k) / t};
            model.probs(x, P);
            next[k + 1].add(mass * P[0]);
            next[k].add(mass * (1.0 - P[0]));
        }
        cur.swap(next);
    }

    ExactLaw1D law;
    law.n = n;
    law.A = spec.A(0, 0);
    law.b = spec.b(0);
    law.pmf.resize(cur.size());
    for (std::size_t k = 0; k < cur.size(); ++k) law.pmf[k] = cur[k].value();
    const ExactMoments m = exact_moments(law);
    law.mean_S = m.mean(0);
    law.var_S = m.cov(0, 0);
    return law;
}

namespace {

using Key = std::vector<long long>;

Key key_of(const std::vector<double>& x) {
    Key k(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) k[i] = std::llround(x[i] * 1e9);
    return k;
}

}  // namespace

SparseLaw enumerate_small_multi(const ValidatedModel& model, int n) {
    const ModelSpec& spec = model.spec();
    if (n < 1 || n > 12) throw Error(ErrorCode::ConfigInvalid, "path enumeration supports 1 <= n <= 12");
    const double branches = static_cast<double>(spec.r) * static_cast<double>(spec.step_law.atoms.size());
    const double paths = static_cast<double>(spec.initial.atoms.size()) * std::pow(branches, n - 1);
    if (paths > kMaxPaths)
        throw Error(ErrorCode::TooManyPaths, std::to_string(paths) + " paths exceed the 1e7 budget");

    const int s = spec.s, r = spec.r;
    std::map<Key, std::pair<std::vector<double>, CompensatedSum>> acc;
    std::vector<double> P(std::max(1, r - 1));
    std::vector<double> x(s);

    auto dfs = [&](auto&& self, std::vector<double>& st, int t, double prob) -> void {
        if (prob == 0.0) return;
        if (t == n) {
            auto& slot = acc[key_of(st)];
            if (slot.first.empty()) slot.first = st;
            slot.second.add(prob);
            return;
        }
        for (int j = 0; j < s; ++j) x[j] = st[j] / t;
        model.probs(x, std::span<double>(P.data(), r - 1));
        std::vector<double> pb(P.begin(), P.begin() + (r - 1));
        double rest = 1.0;
        for (double p : pb) rest -= p;
        pb.push_back(rest);
        for (int i = 0; i < r; ++i) {
            if (pb[i] <= 0.0) continue;
            for (std::size_t a = 0; a < spec.step_law.atoms.size(); ++a) {
                const auto& atom = spec.step_law.atoms[a];
                for (int c : spec.partition[i]) st[c] += atom[c];
                self(self, st, t + 1, prob * pb[i] * spec.step_law.probs[a]);
                for (int c : spec.partition[i]) st[c] -= atom[c];
            }
        }
    };
    for (std::size_t a = 0; a < spec.initial.atoms.size(); ++a) {
        std::vector<double> st = spec.initial.atoms[a];
        dfs(dfs, st, 1, spec.initial.probs[a]);
    }

    SparseLaw law;
    law.n = n;
    for (auto& [k, v] : acc) {
        law.points.push_back(v.first);
        law.probs.push_back(v.second.value());
    }
    return law;
}

ExactMoments exact_moments(const ExactLaw1D& law) {
    CompensatedSum m1, m2;
    for (std::size_t k = 0; k < law.pmf.size(); ++k) {
        const double S = law.A * static_cast<double>(k) + law.n * law.b;
        m1.add(law.pmf[k] * S);
    }
    const double mean = m1.value();
    for (std::size_t k = 0; k < law.pmf.size(); ++k) {
        const double dev = law.A * static_cast<double>(k) + law.n * law.b - mean;
        m2.add(law.pmf[k] * dev * dev);
    }
    return {Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, m2.value())};
}

ExactMoments exact_moments(const SparseLaw& law, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const Eigen::Index d = A.rows();
    ExactMoments out{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
    std::vector<Eigen::VectorXd> S;
    for (const auto& pt : law.points) {
        const Eigen::Map<const Eigen::VectorXd> v(pt.data(), static_cast<Eigen::Index>(pt.size()));
        S.push_back(A * v + law.n * b);
    }
    for (std::size_t i = 0; i < S.size(); ++i) out.mean += law.probs[i] * S[i];
    for (std::size_t i = 0; i < S.size(); ++i) {
        const Eigen::VectorXd dev = S[i] - out.mean;
        out.cov += law.probs[i] * dev * dev.transpose();
    }
    return out;
}

}  // namespace erwlab

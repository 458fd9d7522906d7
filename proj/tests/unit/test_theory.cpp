#include <cmath>

#include <gtest/gtest.h>

#include "erwlab/error.hpp"
#include "erwlab/presets.hpp"
#include "erwlab/theory.hpp"

using namespace erwlab;

namespace {

RegimeReport report(const std::string& name, const Params& p = {}) {
    return classify(require_valid(build_preset(name, p)));
}

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

TEST(Regime, ThresholdsOnTau) {
    EXPECT_EQ(regime_of_tau(0.2), Regime::Diffusive);
    EXPECT_EQ(regime_of_tau(0.5), Regime::Critical);
    EXPECT_EQ(regime_of_tau(0.5 + 1e-12), Regime::Critical);
    EXPECT_EQ(regime_of_tau(0.7), Regime::Supercritical);
    EXPECT_EQ(regime_of_tau(1.0), Regime::Unsupported);
}

TEST(Regime, ErwMemoryParameter) {
    const std::vector<std::pair<std::string, Regime>> cases{
        {"0", Regime::Diffusive},     {"0.3", Regime::Diffusive},     {"0.6", Regime::Diffusive},
        {"0.75", Regime::Critical},   {"0.8", Regime::Supercritical}, {"0.95", Regime::Supercritical}};
    for (const auto& [p, want] : cases) {
        const auto rep = report("erw", {{"p", p}});
        EXPECT_EQ(rep.regime, want) << p;
        EXPECT_TRUE(rep.exact_tau);
        EXPECT_NEAR(rep.tau, 2.0 * std::stod(p) - 1.0, 1e-15);
        EXPECT_NEAR(rep.x0(0), 0.5, 1e-12);
        EXPECT_NEAR(rep.limit(0), 0.0, 1e-12);
    }
}

TEST(Regime, ErwFullMemoryHasNoUniqueRoot) {
    try {
        report("erw", {{"p", "1"}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MultipleRoots);
    }
}

TEST(Constants, ErwDiffusive) {
    const auto rep = report("erw", {{"p", "0.6"}});
    ASSERT_TRUE(rep.cov.clt_variance);
    EXPECT_NEAR((*rep.cov.clt_variance)(0, 0), 1.0 / (3.0 - 4.0 * 0.6), 1e-12);
    ASSERT_TRUE(rep.cov.lil_constant);
    EXPECT_NEAR(*rep.cov.lil_constant, std::sqrt(1.0 / (3.0 - 4.0 * 0.6)), 1e-12);
    EXPECT_NEAR(rep.cov.sigma0(0, 0), 0.25, 1e-15);
}

TEST(Constants, ErwCritical) {
    const auto rep = report("erw", {{"p", "0.75"}});
    ASSERT_TRUE(rep.cov.clt_variance);
    EXPECT_NEAR((*rep.cov.clt_variance)(0, 0), 1.0, 1e-12);
    EXPECT_EQ(rep.cov.sigma2_status, "eigenvector-projector");
    EXPECT_NEAR(*rep.cov.lil_constant, 1.0, 1e-12);
}

TEST(Constants, ErwSupercritical) {
    const auto rep = report("erw", {{"p", "0.85"}});
    ASSERT_TRUE(rep.cov.residual_variance);
    EXPECT_NEAR(*rep.cov.residual_variance, 1.0 / (4.0 * 0.85 - 3.0), 1e-12);
    EXPECT_EQ(rep.m0, 0);
    EXPECT_FALSE(rep.cov.clt_variance);
}

TEST(Constants, LinearMapLimit) {
    const auto rep = report("linear", {});
    // h = 0.4 + 0.2 * 0.7
    EXPECT_NEAR(rep.limit(0), 2.0 * 0.54 - 1.0, 1e-12);
    EXPECT_EQ(rep.regime, Regime::Diffusive);
    EXPECT_TRUE(rep.exact_tau);
    EXPECT_EQ(rep.tau, 0.0);
}

TEST(Constants, MinimalQuadratic) {
    const auto rep = report("minimal", {{"f", "x^2"}});
    // 0.6 x^2 - x + 0.3 = 0
    const double x0 = (1.0 - std::sqrt(1.0 - 4.0 * 0.6 * 0.3)) / 1.2;
    EXPECT_NEAR(rep.x0(0), x0, 1e-12);
    EXPECT_NEAR(rep.tau, 1.2 * x0, 1e-9);
    EXPECT_FALSE(rep.exact_tau);
    EXPECT_EQ(rep.regime, Regime::Diffusive);
    EXPECT_TRUE(rep.downcrossing.verified);
    ASSERT_TRUE(rep.cov.clt_variance);
    EXPECT_NEAR((*rep.cov.clt_variance)(0, 0), x0 * (1.0 - x0) / (1.0 - 2.0 * rep.tau), 1e-9);
}

TEST(Constants, MarketRegimes) {
    EXPECT_EQ(report("market", {{"p", "0.5"}}).regime, Regime::Diffusive);
    const auto crit = report("market", {{"p", "0.16666666666666666"}});
    EXPECT_NEAR(crit.tau, 0.5, 1e-9);
    EXPECT_EQ(crit.regime, Regime::Critical);
    EXPECT_NEAR(crit.x0(0), 0.5, 1e-12);
}

TEST(Constants, KdimIsotropic) {
    const auto rep = report("kdim", {{"k", "2"}, {"p", "0.5"}});
    ASSERT_TRUE(rep.cov.clt_variance);
    // a = (2kp - 1)/(2k - 1); covariance I / (k (1 - 2a))
    const double a = 1.0 / 3.0, v = 1.0 / (2.0 * (1.0 - 2.0 * a));
    const auto& C = *rep.cov.clt_variance;
    EXPECT_NEAR(C(0, 0), v, 1e-9);
    EXPECT_NEAR(C(1, 1), v, 1e-9);
    EXPECT_NEAR(C(0, 1), 0.0, 1e-9);
}

TEST(Constants, RandomMagnitudes) {
    const double p = 0.6;
    const auto rep = report("random-step", {{"p", "0.6"}});
    ASSERT_TRUE(rep.cov.clt_variance);
    // Var Z + (E Z)^2 / (3 - 4p) for Z uniform on {1, 2}
    EXPECT_NEAR((*rep.cov.clt_variance)(0, 0), 0.25 + 2.25 / (3.0 - 4.0 * p), 1e-9);
}

TEST(Constants, CubicSupercritical) {
    const auto rep = report("cubic-supercritical", {});
    EXPECT_NEAR(rep.tau, 3.0 * 0.24, 1e-9);
    EXPECT_EQ(rep.regime, Regime::Supercritical);
    ASSERT_TRUE(rep.eta1);
    EXPECT_NEAR(*rep.eta1, 0.48, 1e-9);
    ASSERT_EQ(rep.beta.size(), 2u);
    EXPECT_NEAR(rep.beta[0], 1.0, 1e-15);
    EXPECT_NEAR(rep.beta[1], -0.48 / (2.0 * 2.0 * 0.28), 1e-9);
}

TEST(Constants, ReportJsonFields) {
    const auto j = report("erw", {{"p", "0.6"}}).to_json();
    for (const char* key : {"x0", "limit", "regime", "tau", "kappa", "eigenvalues", "Sigma0", "clt_variance",
                            "downcrossing", "provenance"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["regime"], "Diffusive");
}

TEST(Critical, SimpleBlockProjector) {
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXd S0(2, 2);
    S0 << 2.0, 0.5, 0.5, 1.0;
    const auto S2 = sigma2_from_jordan(P, {{0.5, 1}, {0.1, 1}}, S0);
    EXPECT_NEAR(S2(0, 0), 2.0, 1e-12);
    EXPECT_NEAR(S2(1, 1), 0.0, 1e-12);
    // size-2 block: R S R^T / (1 * 3)
    const auto S2b = sigma2_from_jordan(P, {{0.5, 2}}, S0);
    EXPECT_NEAR(S2b(0, 0), 1.0 / 3.0, 1e-12);
}

TEST(Expansion, PartitionCountsMatchCompositions) {
    for (int t = 1; t <= 9; ++t)
        for (int i = 1; i <= t; ++i) {
            double total = 0.0;
            for (const auto& p : enumerate_partitions(i, t)) {
                int sum = 0;
                for (int part : p.parts) sum += part;
                EXPECT_EQ(sum, t);
                total += p.nu;
            }
            EXPECT_NEAR(total, binom(t - 1, i - 1), 1e-9) << i << "," << t;
        }
    EXPECT_TRUE(enumerate_partitions(3, 2).empty());
}

TEST(Expansion, MinimalQuadraticClosedForm) {
    for (const auto& [p, q] : std::vector<std::pair<double, double>>{{0.9, 0.3}, {0.95, 0.5}, {0.8, 0.35}}) {
        const double c = p - q, root = std::sqrt(1.0 - 4.0 * q * c);
        const double tau = 1.0 - root;
        const int m = 6;
        std::vector<double> derivs(m, 0.0);
        derivs[0] = 2.0 * c;
        const auto b = expansion_coeffs(derivs, tau, m, ExpansionScale::Auxiliary);
        std::vector<double> ref{0.0, 1.0};
        for (int j = 1; j <= m; ++j) {
            double acc = 0.0;
            for (int l = 1; l <= j; ++l) acc += ref[l] * ref[j + 1 - l];
            ref.push_back(-c / (j * root) * acc);
        }
        ASSERT_EQ(b.size(), static_cast<std::size_t>(m + 1));
        for (int j = 0; j <= m; ++j) EXPECT_NEAR(b[j], ref[j + 1], 1e-12 * std::max(1.0, std::fabs(ref[j + 1])));
    }
}

TEST(Expansion, TauOneThrows) {
    try {
        expansion_coeffs({1.0}, 1.0, 1, ExpansionScale::Auxiliary);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TauEqualsOne);
    }
}

TEST(Expansion, TermCount) {
    EXPECT_EQ(m0_of_tau(0.4), -1);
    EXPECT_EQ(m0_of_tau(0.6), 0);
    EXPECT_EQ(m0_of_tau(2.0 / 3.0), 0);
    EXPECT_EQ(m0_of_tau(0.75), 1);
    EXPECT_EQ(m0_of_tau(0.8), 1);
    EXPECT_EQ(m0_of_tau(0.9), 4);
}

TEST(Downcrossing, ErwHolds) {
    const auto m = require_valid(build_preset("erw", {{"p", "0.9"}}));
    Eigen::VectorXd x0(1);
    x0 << 0.5;
    const auto dc = check_downcrossing(m, x0);
    EXPECT_TRUE(dc.verified);
    EXPECT_LT(dc.max_value, 0.0);
}

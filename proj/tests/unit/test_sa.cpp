#include <cmath>

#include <gtest/gtest.h>

#include "erwlab/error.hpp"
#include "erwlab/presets.hpp"
#include "erwlab/rng.hpp"
#include "erwlab/sa.hpp"
#include "erwlab/theory.hpp"

using namespace erwlab;

namespace {

SAProcess linear(double slope, const std::string& noise, double theta1 = 0.0) {
    std::ostringstream os;
    os.precision(17);
    os << slope << "*x";
    return make_sa_process(FuncExpr::parse(os.str()), 0.0, NoiseSpec::parse(noise), theta1);
}

}  // namespace

TEST(NoiseSpec, ParseAndPrint) {
    EXPECT_EQ(NoiseSpec::parse("none").kind, NoiseSpec::Kind::None);
    EXPECT_EQ(NoiseSpec::parse("none").variance(), 0.0);
    const auto g = NoiseSpec::parse("gaussian:0.5");
    EXPECT_EQ(g.kind, NoiseSpec::Kind::Gaussian);
    EXPECT_DOUBLE_EQ(g.variance(), 0.25);
    EXPECT_EQ(NoiseSpec::parse("rademacher:2").to_string(), "rademacher:2");
    for (const char* bad : {"cauchy:1", "gaussian:x", "gaussian:-1", "gaussian:1.5abc"}) {
        try {
            NoiseSpec::parse(bad);
            FAIL() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
        }
    }
}

TEST(SAProcess, Validation) {
    EXPECT_THROW(make_sa_process(FuncExpr::parse("x + 1"), 0.0, {}), Error);
    EXPECT_THROW(make_sa_process(FuncExpr::parse("-x"), 0.0, {}), Error);
    EXPECT_THROW(make_sa_process(FuncExpr::parse("abs(x)"), 0.0, {}), Error);
    const auto p = make_sa_process(FuncExpr::parse("0.3*x + x^2"), 0.0, {});
    ASSERT_GE(p.derivs.size(), 2u);
    EXPECT_NEAR(p.slope(), 0.3, 1e-12);
    EXPECT_NEAR(p.derivs[1], 2.0, 1e-9);
    EXPECT_TRUE(p.standard_step());
}

TEST(SARecursion, ZeroNoiseLinearDrift) {
    // Theta_{n+1} = Theta_n (1 - 1/(n+1)) telescopes to Theta_1 / n
    const auto proc = linear(1.0, "none", 2.0);
    std::vector<long> cps;
    for (long n = 1; n <= 10000; n = n < 20 ? n + 1 : n * 3 / 2) cps.push_back(n);
    cps.push_back(10000);
    const auto path = run_sa(proc, 10000, 1, cps);
    for (std::size_t c = 0; c < path.checkpoints.size(); ++c)
        EXPECT_NEAR(path.theta[c], 2.0 / static_cast<double>(path.checkpoints[c]), 1e-14) << path.checkpoints[c];
}

TEST(SARecursion, NoiseUsesCounterStream) {
    const auto proc = linear(1.0, "gaussian:1.0");
    const std::uint64_t key = trajectory_key(4, 0);
    const auto path = run_sa(proc, 3, key, {1, 2, 3});
    const double e2 = Philox::normal(key, 1), e3 = Philox::normal(key, 2);
    const double t2 = 0.0 - 0.5 * (0.0 + e2);
    const double t3 = t2 - (1.0 / 3.0) * (t2 + e3);
    EXPECT_EQ(path.theta[0], 0.0);
    EXPECT_DOUBLE_EQ(path.theta[1], t2);
    EXPECT_DOUBLE_EQ(path.theta[2], t3);
}

TEST(SARecursion, EnsembleIndependentOfThreads) {
    const auto proc = linear(0.8, "rademacher:1");
    const auto a = sa_ensemble(proc, 2000, 50, 7, {}, 1);
    const auto b = sa_ensemble(proc, 2000, 50, 7, {}, 3);
    EXPECT_EQ(a.theta, b.theta);
}

TEST(SARecursion, DivergenceGuard) {
    const auto proc = make_sa_process(FuncExpr::parse("x + x^3"), 0.0, NoiseSpec::parse("none"), 5.0);
    try {
        run_sa(proc, 100, 1, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DivergenceGuard);
    }
}

TEST(SAExpansion, SecondCoefficient) {
    const auto b = sa_expansion_coeffs({0.3, 2.0, 0.0}, 3);
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b[0], 1.0);
    EXPECT_NEAR(b[1], 1.0 / 0.3, 1e-12);
    // b_3 = (psi''/2 * 2 b_1 b_2 + psi'''/6 b_1^3) / (2 psi')
    EXPECT_NEAR(b[2], (2.0 * (1.0 / 0.3)) / (2.0 * 0.3), 1e-12);
    EXPECT_THROW(sa_expansion_coeffs({0.3}, 2), Error);
}

TEST(SAExpansion, CompositionsMatchPartitionRecursion) {
    const std::vector<std::vector<double>> cases{
        {0.3, 2.0, -1.0, 0.5, 3.0, -2.0}, {0.15, -0.7, 4.0, 1.0, 0.0, 0.25}, {0.45, 1.0, 1.0, 1.0, 1.0, 1.0}};
    for (const auto& d : cases) {
        const int k = 6;
        const auto b = sa_expansion_coeffs(d, k);
        std::vector<double> higher;
        for (std::size_t i = 1; i < d.size(); ++i) higher.push_back(-d[i]);
        const auto ref = expansion_coeffs(higher, 1.0 - d[0], k - 1, ExpansionScale::Auxiliary);
        ASSERT_EQ(ref.size(), b.size());
        for (std::size_t j = 0; j < b.size(); ++j)
            EXPECT_NEAR(b[j], ref[j], 1e-12 * std::max(1.0, std::fabs(ref[j]))) << j;
    }
}

TEST(SAExpansion, InversionRoundTrip) {
    const std::vector<double> b{1.0, 1.0 / 0.3, 5.0};
    for (double u : {-0.01, 0.0, 1e-4, 0.02}) {
        const double delta = b[0] * u + b[1] * u * u + b[2] * u * u * u;
        EXPECT_NEAR(invert_expansion(b, delta), u, 1e-14);
    }
}

TEST(SACheck, LinearDriftVariance) {
    const auto proc = linear(1.0, "gaussian:1.0");
    const auto ens = sa_ensemble(proc, 4000, 3000, 12, {});
    const auto r = sa_fluctuation_check(ens, proc, 0.1);
    EXPECT_TRUE(r.pass) << r.statistic[0] << " vs " << r.predicted[0];
    EXPECT_NEAR(r.predicted[0], 1.0, 1e-12);
}

TEST(SACheck, ExpansionRegimeGuard) {
    const auto proc = linear(0.8, "gaussian:1.0");
    const auto ens = sa_ensemble(proc, 100, 10, 1, {});
    try {
        sa_expansion_check(ens, proc, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::WrongDerivativeRegime);
    }
}

TEST(GerwReduction, MomentsOfErw) {
    const double p = 0.7;
    const auto sa = gerw_to_sa(require_valid(build_preset("erw", {{"p", "0.7"}})));
    Eigen::VectorXd half(1);
    half << 0.5;
    EXPECT_NEAR(sa.sigma2(half), 0.25, 1e-15);
    EXPECT_NEAR(sa.gamma(half)(0), 0.0, 1e-15);
    EXPECT_NEAR(sa.drift_1d()(0.5), 0.0, 1e-15);
    EXPECT_NEAR(derive_at(sa.drift_1d(), 0.5, 1).value, 1.0 - (2.0 * p - 1.0), 1e-9);
    EXPECT_LE(sa.noise_bound(), 2.0);
}

TEST(GerwReduction, PathIsScaledAuxiliaryWalk) {
    const auto m = require_valid(build_preset("gerw-1d", {{"f", "x^2"}, {"p", "0.8"}}));
    const auto sa = gerw_to_sa(m);
    FunctionalConfig cfg;
    cfg.retain_aux = true;
    const std::vector<long> cps{1, 10, 100, 1000};
    for (std::uint64_t i = 0; i < 10; ++i) {
        const auto key = trajectory_key(3, i);
        EXPECT_EQ(run_gerw_sa(sa, 1000, key, cps).theta, trajectory(m, 1000, key, cps, cfg).aux);
        EXPECT_LE(max_noise_norm(sa, 1000, key), sa.noise_bound());
    }
}

TEST(GerwReduction, NoiseMomentsOfErw) {
    const auto m = require_valid(build_preset("erw", {{"p", "0.6"}}));
    FunctionalConfig cfg;
    cfg.noise = true;
    cfg.noise_lo = 0.4;
    cfg.noise_hi = 0.6;
    cfg.noise_bins = 10;
    const auto st = ensemble(m, 4000, 300, 6, {}, cfg);
    const auto r = noise_moment_check(st);
    EXPECT_EQ(r.tag, TheoremTag::NoiseMoments);
    EXPECT_TRUE(r.pass);
    NoiseCheckOptions strict;
    strict.min_count = 1e12;
    try {
        noise_moment_check(st, strict);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientBinCounts);
    }
}

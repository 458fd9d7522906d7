#include <cmath>

#include <gtest/gtest.h>

#include "erwlab/error.hpp"
#include "erwlab/oracle.hpp"
#include "erwlab/presets.hpp"

using namespace erwlab;

namespace {

const std::vector<std::pair<std::string, Params>>& unit_step_models() {
    static const std::vector<std::pair<std::string, Params>> models{
        {"erw", {{"p", "0.7"}, {"q", "0.3"}}},
        {"gerw-1d", {{"f", "x^3"}, {"p", "0.8"}}},
        {"minimal", {{"f", "x^2"}, {"p", "0.9"}, {"q", "0.3"}}},
        {"market", {{"p", "0.2"}}},
        {"linear", {}},
        {"quadratic-sym", {}},
        {"poly-g", {}},
        {"phi-power", {}},
        {"cubic-supercritical", {}},
    };
    return models;
}

double sum_of(const std::vector<double>& v) {
    CompensatedSum s;
    for (double x : v) s.add(x);
    return s.value();
}

}  // namespace

TEST(Oracle, DpAgreesWithEnumeration) {
    for (const auto& [name, params] : unit_step_models()) {
        const auto m = require_valid(build_preset(name, params));
        for (int n : {1, 2, 5, 9, 12}) {
            const auto dp = exact_dp_1d(m, n);
            const auto en = enumerate_small_multi(m, n);
            std::vector<double> from_paths(n + 1, 0.0);
            for (std::size_t i = 0; i < en.points.size(); ++i)
                from_paths[static_cast<std::size_t>(std::lround(en.points[i][0]))] += en.probs[i];
            ASSERT_EQ(dp.pmf.size(), static_cast<std::size_t>(n + 1));
            for (int k = 0; k <= n; ++k) EXPECT_NEAR(dp.pmf[k], from_paths[k], 1e-12) << name << " n=" << n;
        }
    }
}

TEST(Oracle, PmfSumsToOne) {
    for (const auto& [name, params] : unit_step_models()) {
        const auto m = require_valid(build_preset(name, params));
        for (int n : {10, 200, 2000}) EXPECT_NEAR(sum_of(exact_dp_1d(m, n).pmf), 1.0, 1e-12) << name;
    }
    for (const auto& name : {"random-step", "kdim"}) {
        const auto law = enumerate_small_multi(require_valid(build_preset(name, {})), 6);
        EXPECT_NEAR(sum_of(law.probs), 1.0, 1e-12) << name;
    }
}

TEST(Oracle, ErwMeanProduct) {
    const double p = 0.7, q = 0.3;
    const auto m = require_valid(build_preset("erw", {{"p", "0.7"}, {"q", "0.3"}}));
    for (int n : {1, 10, 100, 1000}) {
        double mean = 2.0 * q - 1.0;
        for (int k = 1; k < n; ++k) mean *= 1.0 + (2.0 * p - 1.0) / k;
        EXPECT_NEAR(exact_dp_1d(m, n).mean_S, mean, 1e-10 * std::max(1.0, std::fabs(mean))) << n;
    }
}

TEST(Oracle, SimpleRandomWalkVariance) {
    const auto m = require_valid(build_preset("erw", {{"p", "0.5"}}));
    const auto law = exact_dp_1d(m, 500);
    EXPECT_NEAR(law.mean_S, 0.0, 1e-10);
    EXPECT_NEAR(law.var_S, 500.0, 1e-8);
}

TEST(Oracle, MultiMomentsMatchDp) {
    const auto m = require_valid(build_preset("erw", {{"p", "0.8"}}));
    const auto en = enumerate_small_multi(m, 11);
    const auto mm = exact_moments(en, m.spec().A, m.spec().b);
    const auto dp = exact_dp_1d(m, 11);
    EXPECT_NEAR(mm.mean(0), dp.mean_S, 1e-12);
    EXPECT_NEAR(mm.cov(0, 0), dp.var_S, 1e-11);
}

TEST(Oracle, KdimFirstStepDirections) {
    const auto m = require_valid(build_preset("kdim", {{"k", "2"}}));
    const auto law = enumerate_small_multi(m, 1);
    const auto mm = exact_moments(law, m.spec().A, m.spec().b);
    EXPECT_NEAR(mm.mean.norm(), 0.0, 1e-15);
    EXPECT_NEAR(mm.cov(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(mm.cov(1, 1), 0.5, 1e-15);
}

TEST(Oracle, UnsupportedAndBudget) {
    try {
        exact_dp_1d(require_valid(build_preset("random-step", {})), 5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsupportedModel);
    }
    try {
        enumerate_small_multi(require_valid(build_preset("kdim", {{"k", "4"}})), 12);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooManyPaths);
    }
    EXPECT_THROW(enumerate_small_multi(require_valid(build_preset("erw", {})), 13), Error);
    EXPECT_THROW(exact_dp_1d(require_valid(build_preset("erw", {})), 0), Error);
}

TEST(Oracle, CompensatedSumRecoversSmallTerms) {
    CompensatedSum s;
    s.add(1.0);
    for (int i = 0; i < 1000; ++i) s.add(1e-17);
    s.add(-1.0);
    EXPECT_NEAR(s.value(), 1e-14, 1e-20);
}

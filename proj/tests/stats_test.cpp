#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "blex/detail/special.hpp"
#include "blex/random.hpp"
#include "blex/stats.hpp"

using namespace blex;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST(MeanCi, Basics) {
    EXPECT_THROW(mean_ci({}), std::invalid_argument);
    const auto single = mean_ci({3.0});
    EXPECT_DOUBLE_EQ(single.value, 3.0);
    EXPECT_DOUBLE_EQ(single.ci_half, 0.0);
    const auto est = mean_ci({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(est.value, 2.5);
    // sd = sqrt(5/3), se = sd/2
    EXPECT_NEAR(est.ci_half, 1.96 * std::sqrt(5.0 / 3.0) / 2.0, 1e-12);
}

TEST(ProportionCi, Basics) {
    const auto est = proportion_ci(30.0, 100.0);
    EXPECT_DOUBLE_EQ(est.value, 0.3);
    EXPECT_NEAR(est.ci_half, 1.96 * std::sqrt(0.21 / 100.0), 1e-12);
    // degenerate proportions keep a floor so the CI never collapses to zero
    EXPECT_GT(proportion_ci(0.0, 100.0).ci_half, 0.0);
    EXPECT_THROW(proportion_ci(1.0, 0.0), std::invalid_argument);
}

TEST(KsDistance, ExactSmallCases) {
    // empirical CDF steps 1/2 then 1 against U(0,1): sup at the first jump
    std::vector<double> two_hundred;
    for (int i = 0; i < 200; ++i) two_hundred.push_back(i < 100 ? 0.1 : 0.9);
    const double d = ks_distance(two_hundred, [](double x) {
        return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : x);
    });
    EXPECT_NEAR(d, 0.4, 1e-12); // |0.5 - 0.1| at x = 0.1 and |0.5 - 0.9| at 0.9

    EXPECT_THROW(ks_distance({1.0, 2.0}, [](double) { return 0.5; }), std::invalid_argument);
}

TEST(KsDistance, MinusInfAtoms) {
    std::vector<double> all_dead(150, -kInf);
    EXPECT_DOUBLE_EQ(ks_distance(all_dead, [](double) { return 1.0; }, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(ks_distance(all_dead, [](double) { return 1.0; }, 0.6), 0.4);
    // 10% dead mass modeled exactly: remaining law uniform
    std::vector<double> mixed;
    for (int i = 0; i < 100; ++i) mixed.push_back(-kInf);
    RandomStream rng(5, 6, 7);
    for (int i = 0; i < 900; ++i) mixed.push_back(rng.u01());
    const double d = ks_distance(
        mixed, [](double x) { return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : x); }, 0.1);
    EXPECT_LT(d, 0.05);
}

TEST(KsDistance, SelfDrawnSmall) {
    RandomStream rng(8, 9, 10);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = rng.exponential(2.0);
    const double d =
        ks_distance(xs, [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-2.0 * x); });
    EXPECT_LT(d, 0.006);
    // a shifted model is detected
    const double bad =
        ks_distance(xs, [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-1.6 * x); });
    EXPECT_GT(bad, 0.04);
}

TEST(KsDistance, InvariantUnderMonotoneMaps) {
    RandomStream rng(11, 12, 13);
    std::vector<double> xs(5000), cubes(5000);
    for (int i = 0; i < 5000; ++i) {
        xs[i] = rng.u01();
        cubes[i] = xs[i] * xs[i] * xs[i];
    }
    auto unif = [](double x) { return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : x); };
    const double d1 = ks_distance(xs, unif);
    const double d2 = ks_distance(cubes, [&](double y) { return unif(std::cbrt(y)); });
    EXPECT_NEAR(d1, d2, 1e-12);
}

TEST(KsTwoSample, SameAndDifferent) {
    RandomStream rng(14, 15, 16);
    std::vector<double> a(20000), b(20000), c(20000);
    for (int i = 0; i < 20000; ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal();
        c[i] = rng.normal() + 0.08;
    }
    const auto same = ks_two_sample(a, b);
    EXPECT_GT(same.p_value, 0.001);
    const auto diff = ks_two_sample(a, c);
    EXPECT_LT(diff.p_value, 0.001);
    EXPECT_GT(diff.statistic, same.statistic);
}

TEST(ChiSquare, ExactAndPower) {
    // counts exactly proportional to probs: statistic 0, p = 1
    const auto exact = chi_square_gof({50.0, 30.0, 20.0}, {0.5, 0.3, 0.2});
    EXPECT_DOUBLE_EQ(exact.statistic, 0.0);
    EXPECT_DOUBLE_EQ(exact.p_value, 1.0);
    EXPECT_EQ(exact.dof, 2u);

    // clearly wrong model
    const auto off = chi_square_gof({500.0, 300.0, 200.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    EXPECT_LT(off.p_value, 1e-6);

    EXPECT_THROW(chi_square_gof({1.0}, {1.0}), std::invalid_argument);
    EXPECT_THROW(chi_square_gof({1.0, 2.0}, {0.6, 0.6}), std::invalid_argument);
}

TEST(ChiSquare, PoolsSparseBins) {
    // geometric-ish expected counts: the deep tail pools until expected >= 5
    std::vector<double> probs, counts;
    double rest = 1.0;
    for (int k = 0; k < 20; ++k) {
        const double p = rest * 0.5;
        probs.push_back(p);
        counts.push_back(std::round(100 * p));
        rest -= p;
    }
    probs.back() += rest;
    const auto chi = chi_square_gof(counts, probs);
    EXPECT_LT(chi.pooled_bins, 20u);
    EXPECT_GE(chi.pooled_bins, 2u);
    EXPECT_GT(chi.p_value, 0.5); // counts were rounded expectations
}

TEST(ChiSquare, TwoSampleHomogeneity) {
    RandomStream rng(17, 18, 19);
    std::vector<double> a(10, 0.0), b(10, 0.0), c(10, 0.0);
    for (int i = 0; i < 30000; ++i) {
        a[std::min<std::uint64_t>(rng.poisson(3.0), 9)] += 1.0;
        b[std::min<std::uint64_t>(rng.poisson(3.0), 9)] += 1.0;
        c[std::min<std::uint64_t>(rng.poisson(3.35), 9)] += 1.0;
    }
    EXPECT_GT(chi_square_two_sample(a, b).p_value, 0.001);
    EXPECT_LT(chi_square_two_sample(a, c).p_value, 0.001);
}

TEST(SpecialFunctions, GammaQAgainstTables) {
    // chi-square upper quantiles: P(chi2_k > x)
    EXPECT_NEAR(detail::gamma_q(0.5, 3.841 / 2.0), 0.05, 5e-4);  // k = 1
    EXPECT_NEAR(detail::gamma_q(1.0, 5.991 / 2.0), 0.05, 5e-4);  // k = 2
    EXPECT_NEAR(detail::gamma_q(5.0, 18.307 / 2.0), 0.05, 5e-4); // k = 10
    EXPECT_NEAR(detail::gamma_q(5.0, 23.209 / 2.0), 0.01, 2e-4);
    EXPECT_DOUBLE_EQ(detail::gamma_q(2.0, 0.0), 1.0);
}

TEST(SpecialFunctions, KolmogorovQSpots) {
    EXPECT_NEAR(detail::kolmogorov_q(1.3581), 0.05, 2e-3);
    EXPECT_NEAR(detail::kolmogorov_q(1.6276), 0.01, 1e-3);
    EXPECT_DOUBLE_EQ(detail::kolmogorov_q(0.1), 1.0);
}

TEST(Convergence, MonotoneAndFinal) {
    std::vector<TrendRow> rows = {
        {2.0, 1.0 + std::exp(-2.0), 0.001},
        {4.0, 1.0 + std::exp(-4.0), 0.001},
        {8.0, 1.0 + std::exp(-8.0), 0.001},
    };
    const auto rep = convergence_report(rows, 1.0, 0.05);
    EXPECT_TRUE(rep.monotone_ok);
    EXPECT_TRUE(rep.final_ok);
    EXPECT_NEAR(rep.final_gap, std::exp(-8.0), 1e-12);
    EXPECT_FALSE(rep.table.empty());

    // a gap growing beyond joint noise flags the trend
    std::vector<TrendRow> bad = {{2.0, 1.01, 0.001}, {4.0, 1.05, 0.001}};
    EXPECT_FALSE(convergence_report(bad, 1.0, 0.1).monotone_ok);

    // within-noise wobble is tolerated
    std::vector<TrendRow> wobble = {{2.0, 1.010, 0.01}, {4.0, 1.015, 0.01}};
    EXPECT_TRUE(convergence_report(wobble, 1.0, 0.1).monotone_ok);

    std::vector<TrendRow> miss = {{2.0, 1.2, 0.001}, {4.0, 1.2, 0.001}};
    EXPECT_FALSE(convergence_report(miss, 1.0, 0.1).final_ok);

    EXPECT_THROW(convergence_report({{1.0, 1.0, 0.0}}, 1.0, 0.1), std::invalid_argument);
}

TEST(LaplaceCompare, ZeroFunctionAndOverlap) {
    const TestFunction zero{{0.0, 1.0}, {0.0, 0.0}};
    std::vector<PointMeasure> measures(50);
    for (int i = 0; i < 50; ++i) measures[std::size_t(i)].add(double(i + 1));
    const auto cmp = laplace_compare(measures, zero, 1.0, 0.0);
    EXPECT_DOUBLE_EQ(cmp.empirical.value, 1.0);
    EXPECT_TRUE(cmp.overlap);

    const auto g = TestFunction::ramp_up(0.0, 1.0, 100.0); // kills every measure
    const auto far = laplace_compare(measures, g, 0.9, 0.01);
    EXPECT_FALSE(far.overlap);
    EXPECT_NEAR(far.empirical.value, 0.0, 1e-12);

    EXPECT_THROW(laplace_compare({}, zero, 1.0, 0.0), std::invalid_argument);
}

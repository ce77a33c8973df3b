#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "blex/branching.hpp"
#include "blex/stats.hpp"

using namespace blex;

namespace {

const OffspringLaw kBinary{{0.25, 0.0, 0.75}}; // extinction prob 1/3, lambda = beta/2

// Backward-equation oracle: F(t) = P(Z_t = 0) solves F' = beta (f(F) - F),
// F(0) = 0; vartheta = int_0^inf e^{-lambda t} (1 - F(t)) dt. RK4 on the
// augmented state, far past the e^{-lambda t} horizon.
double theta_by_ode(const BranchingConfig& cfg, double* extinction_out = nullptr) {
    const double lambda = cfg.lambda();
    double F = 0.0, I = 0.0, t = 0.0;
    const double dt = 1e-3;
    auto dF = [&](double f) { return cfg.beta * (cfg.offspring.generating(f) - f); };
    auto dI = [&](double time, double f) { return std::exp(-lambda * time) * (1.0 - f); };
    while (t < 60.0) {
        const double k1f = dF(F), k1i = dI(t, F);
        const double k2f = dF(F + 0.5 * dt * k1f), k2i = dI(t + 0.5 * dt, F + 0.5 * dt * k1f);
        const double k3f = dF(F + 0.5 * dt * k2f), k3i = dI(t + 0.5 * dt, F + 0.5 * dt * k2f);
        const double k4f = dF(F + dt * k3f), k4i = dI(t + dt, F + dt * k3f);
        F += dt / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        I += dt / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
        t += dt;
    }
    if (extinction_out) *extinction_out = F;
    return I + std::exp(-lambda * t) * (1.0 - F) / lambda; // constant-tail remainder
}

// Forward Kolmogorov oracle for the binary law: birth-death rates
// k -> k+1 at beta p2 k, k -> k-1 at beta p0 k. Returns the size-biased
// cluster pmf P(T = k) = int lambda e^{-lambda s} P(Z_s = k) ds / (lambda theta).
std::vector<double> cluster_pmf_by_ode(const BranchingConfig& cfg, std::size_t kmax) {
    const double lambda = cfg.lambda();
    const double p0 = cfg.offspring.probs[0];
    const double p2 = cfg.offspring.probs[2];
    const std::size_t dim = kmax + 40; // truncation buffer
    std::vector<double> p(dim + 1, 0.0), integral(dim + 1, 0.0);
    p[1] = 1.0;
    auto deriv = [&](const std::vector<double>& state, std::vector<double>& out) {
        for (std::size_t k = 0; k <= dim; ++k) {
            double v = -cfg.beta * double(k) * state[k];
            if (k >= 1 && k - 1 >= 1) v += cfg.beta * p2 * double(k - 1) * state[k - 1];
            if (k + 1 <= dim) v += cfg.beta * p0 * double(k + 1) * state[k + 1];
            out[k] = v;
        }
    };
    const double dt = 2e-3;
    std::vector<double> k1(dim + 1), k2(dim + 1), k3(dim + 1), k4(dim + 1), tmp(dim + 1);
    double t = 0.0;
    double alive_integral = 0.0;
    while (t < 60.0) {
        const double w = std::exp(-lambda * t); // left-endpoint weight refined below
        const double p0_state = p[0];
        deriv(p, k1);
        for (std::size_t k = 0; k <= dim; ++k) tmp[k] = p[k] + 0.5 * dt * k1[k];
        deriv(tmp, k2);
        for (std::size_t k = 0; k <= dim; ++k) tmp[k] = p[k] + 0.5 * dt * k2[k];
        deriv(tmp, k3);
        for (std::size_t k = 0; k <= dim; ++k) tmp[k] = p[k] + dt * k3[k];
        deriv(tmp, k4);
        const double w_mid = std::exp(-lambda * (t + 0.5 * dt));
        const double w_end = std::exp(-lambda * (t + dt));
        for (std::size_t k = 0; k <= dim; ++k) {
            // Simpson in time for the weighted integral, using the RK stages
            const double mid = p[k] + 0.5 * dt * k2[k];
            const double end = p[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
            integral[k] += dt / 6.0 * (w * p[k] + 4.0 * w_mid * mid + w_end * end);
            p[k] = end;
        }
        // survival weight, same Simpson: state 0 is absorbing, so 1 - p_0
        // counts all alive states including mass beyond the truncation
        const double mid0 = p0_state + 0.5 * dt * k2[0];
        const double end0 = p0_state + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        alive_integral +=
            dt / 6.0 * (w * (1.0 - p0_state) + 4.0 * w_mid * (1.0 - mid0) + w_end * (1.0 - end0));
        t += dt;
    }
    // normalize by theta = int e^{-lambda t} P(Z_t >= 1) dt: the cluster tail
    // beyond the truncation is ~ C/k^2 and must still carry its probability
    std::vector<double> pmf(kmax + 1, 0.0);
    for (std::size_t k = 1; k <= kmax; ++k) pmf[k] = integral[k] / alive_integral;
    return pmf;
}

} // namespace

TEST(OffspringLaw, BasicsAndValidation) {
    const auto yule = OffspringLaw::yule();
    EXPECT_TRUE(yule.is_yule());
    EXPECT_DOUBLE_EQ(yule.mean(), 2.0);
    EXPECT_DOUBLE_EQ(yule.generating(0.3), 0.09);
    EXPECT_DOUBLE_EQ(yule.generating_derivative(0.3), 0.6);

    EXPECT_DOUBLE_EQ(kBinary.mean(), 1.5);
    EXPECT_NEAR(kBinary.generating(0.5), 0.25 + 0.75 * 0.25, 1e-15);

    EXPECT_THROW(OffspringLaw{{}}.validate(), std::invalid_argument);
    EXPECT_THROW((OffspringLaw{{0.5, 0.4}}.validate()), std::invalid_argument);
    EXPECT_THROW((OffspringLaw{{-0.1, 1.1}}.validate()), std::invalid_argument);
    EXPECT_THROW(OffspringLaw{std::vector<double>(66, 1.0 / 66.0)}.validate(),
                 std::invalid_argument);
}

TEST(OffspringLaw, SamplerMatchesProbs) {
    const OffspringLaw law{{0.2, 0.1, 0.3, 0.4}};
    RandomStream rng(11, 12, 13);
    std::vector<double> counts(4, 0.0);
    const int n = 200000;
    for (int i = 0; i < n; ++i) counts[law.sample(rng)] += 1.0;
    const auto chi = chi_square_gof(counts, law.probs);
    EXPECT_GT(chi.p_value, 0.001);
}

TEST(Extinction, KnownFixedPoints) {
    EXPECT_DOUBLE_EQ(extinction_probability(OffspringLaw::yule()), 0.0);
    // p0 = 1/4, p2 = 3/4: smallest root of 3 q^2 - 4 q + 1 = 0 is 1/3
    EXPECT_NEAR(extinction_probability(kBinary), 1.0 / 3.0, 1e-12);
    // subcritical: q = 1
    EXPECT_NEAR(extinction_probability(OffspringLaw{{0.6, 0.4}}), 1.0, 1e-12);
    // p0 = 0.5, p2 = 0.5: critical-like? mean = 1, q = 1
    EXPECT_NEAR(extinction_probability(OffspringLaw{{0.5, 0.0, 0.5}}), 1.0, 1e-9);
}

TEST(Population, YuleClosedFormIsGeometric) {
    BranchingConfig cfg; // Yule, beta = 1
    const double t = 2.0;
    const double p = std::exp(-t);
    RandomStream rng(21, 22, 23);
    const int n = 200000;
    std::vector<double> counts(41, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto z = simulate_population(cfg, t, rng, PopulationMethod::YuleClosedForm);
        counts[std::min<std::uint64_t>(z, 40)] += 1.0;
    }
    std::vector<double> probs(41, 0.0);
    double tail = 1.0;
    for (int k = 1; k < 40; ++k) {
        probs[k] = p * std::pow(1.0 - p, k - 1);
        tail -= probs[k];
    }
    probs[40] = tail;
    const auto chi = chi_square_gof(counts, probs);
    EXPECT_GT(chi.p_value, 0.001);
}

TEST(Population, EventDrivenAgreesWithYuleClosedForm) {
    // the event loop is validated against the exact geometric law
    BranchingConfig cfg;
    const double t = 2.0;
    const double p = std::exp(-t);
    RandomStream rng(31, 32, 33);
    const int n = 100000;
    std::vector<double> counts(41, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto z = simulate_population(cfg, t, rng, PopulationMethod::EventDriven);
        ASSERT_GE(z, 1u);
        counts[std::min<std::uint64_t>(z, 40)] += 1.0;
    }
    std::vector<double> probs(41, 0.0);
    double tail = 1.0;
    for (int k = 1; k < 40; ++k) {
        probs[k] = p * std::pow(1.0 - p, k - 1);
        tail -= probs[k];
    }
    probs[40] = tail;
    const auto chi = chi_square_gof(counts, probs);
    EXPECT_GT(chi.p_value, 0.001);
}

TEST(Population, MeanGrowthGeneralLaw) {
    BranchingConfig cfg{1.0, kBinary}; // lambda = 0.5
    const double t = 2.0;
    RandomStream rng(41, 42, 43);
    const int n = 200000;
    std::vector<double> zs(n);
    for (int i = 0; i < n; ++i) zs[i] = double(simulate_population(cfg, t, rng));
    const auto est = mean_ci(zs);
    EXPECT_NEAR(est.value, std::exp(cfg.lambda() * t), 2.0 * est.ci_half + 1e-9);
}

TEST(Population, SemigroupProperty) {
    // Z_{s+t} =d sum of Z_t copies spawned by the Z_s survivors
    BranchingConfig cfg{1.0, kBinary};
    const double s = 0.7, t = 0.7;
    RandomStream rng(51, 52, 53);
    const int n = 150000;
    const std::size_t top = 25;
    std::vector<double> direct(top + 1, 0.0), composed(top + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto z = simulate_population(cfg, s + t, rng);
        direct[std::min<std::uint64_t>(z, top)] += 1.0;
        std::uint64_t acc = 0;
        const auto zs = simulate_population(cfg, s, rng);
        for (std::uint64_t k = 0; k < zs; ++k) acc += simulate_population(cfg, t, rng);
        composed[std::min<std::uint64_t>(acc, top)] += 1.0;
    }
    const auto chi = chi_square_two_sample(direct, composed);
    EXPECT_GT(chi.p_value, 0.001);
}

TEST(Population, ZeroTimeAndValidation) {
    BranchingConfig cfg;
    RandomStream rng(1, 2, 3);
    EXPECT_EQ(simulate_population(cfg, 0.0, rng), 1u);
    EXPECT_THROW(simulate_population(cfg, -1.0, rng), std::invalid_argument);
    BranchingConfig bad{1.0, kBinary};
    EXPECT_THROW(simulate_population(bad, 1.0, rng, PopulationMethod::YuleClosedForm),
                 std::invalid_argument);
    EXPECT_THROW((BranchingConfig{0.0, OffspringLaw::yule()}).validate(), std::invalid_argument);
    EXPECT_THROW((BranchingConfig{1.0, OffspringLaw{{0.6, 0.4}}}).validate(),
                 std::invalid_argument);
}

TEST(ExtinctionTime, MatchesClosedFormSurvival) {
    // For the binary law with beta = 1: P(Z_t > 0) = 2 / (3 - e^{-t/2}).
    BranchingConfig cfg{1.0, kBinary};
    const double q = extinction_probability(cfg.offspring);
    RandomStream rng(61, 62, 63);
    const int n = 100000;
    std::vector<double> times(n);
    for (int i = 0; i < n; ++i) times[i] = simulate_extinction_time(cfg, rng, q);
    for (double t : {0.5, 2.0, 5.0}) {
        double hits = 0.0;
        for (double e : times) hits += e <= t;
        const double target = 1.0 - 2.0 / (3.0 - std::exp(-0.5 * t));
        const auto est = proportion_ci(hits, double(n));
        EXPECT_NEAR(est.value, target, 2.0 * est.ci_half + 1e-9) << "t " << t;
    }
    double survived = 0.0;
    for (double e : times) survived += std::isinf(e);
    const auto surv = proportion_ci(survived, double(n));
    EXPECT_NEAR(surv.value, 2.0 / 3.0, 2.0 * surv.ci_half + 1e-9);
}

TEST(MartingaleW, UnitMeanAtAnyHorizon) {
    BranchingConfig cfg{1.0, kBinary};
    RandomStream rng(71, 72, 73);
    for (double horizon : {1.0, 6.0, 16.0}) {
        const int n = 60000;
        std::vector<double> ws(n);
        for (int i = 0; i < n; ++i) ws[i] = sample_W(cfg, horizon, rng);
        const auto est = mean_ci(ws);
        EXPECT_NEAR(est.value, 1.0, 2.5 * est.ci_half) << "horizon " << horizon;
    }
}

TEST(MartingaleW, YuleLimitIsExponential) {
    BranchingConfig cfg; // Yule
    RandomStream rng(81, 82, 83);
    const int n = 50000;
    std::vector<double> ws(n);
    for (int i = 0; i < n; ++i) ws[i] = sample_W(cfg, 12.0, rng);
    const double ks =
        ks_distance(ws, [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); });
    EXPECT_LT(ks, 0.012);
}

TEST(MartingaleW, AtomAtZeroMatchesExtinction) {
    BranchingConfig cfg{1.0, kBinary};
    RandomStream rng(91, 92, 93);
    const int n = 30000;
    double zeros = 0.0;
    for (int i = 0; i < n; ++i) zeros += sample_W(cfg, 12.0, rng) == 0.0;
    const auto est = proportion_ci(zeros, double(n));
    // the horizon cuts extinction after t = 12: deficit q - F(12) = 5.6e-4
    EXPECT_NEAR(est.value, 1.0 / 3.0, 2.0 * est.ci_half + 6e-4);
}

TEST(Theta, ExactForSureSurvival) {
    BranchingConfig cfg{2.0, OffspringLaw::yule()}; // lambda = 2
    RandomStream rng(1, 2, 3);
    EXPECT_DOUBLE_EQ(theta_constant(cfg, 10, rng), 0.5);
}

TEST(Theta, BinaryLawClosedFormOdeAndMonteCarloAgree) {
    BranchingConfig cfg{1.0, kBinary};
    const double closed = 4.0 * std::log(1.5); // from P(Z_t>0) = 2/(3 - e^{-t/2})
    EXPECT_NEAR(closed, 1.6218604324326575, 1e-15);
    double F_inf = 0.0;
    const double ode = theta_by_ode(cfg, &F_inf);
    EXPECT_NEAR(ode, closed, 1e-8);
    EXPECT_NEAR(F_inf, 1.0 / 3.0, 1e-8);
    RandomStream rng(101, 102, 103);
    const double mc = theta_constant(cfg, 300000, rng);
    EXPECT_NEAR(mc, closed, 0.008); // statistic sd < 1, 4 SE ~ 0.007
}

TEST(Cluster, YuleClosedFormPmf) {
    BranchingConfig cfg;
    RandomStream rng(111, 112, 113);
    const int n = 100000;
    const std::size_t top = 21;
    std::vector<double> counts(top, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto v = sample_cluster_size(cfg, rng, ClusterMethod::YuleClosedForm);
        counts[std::min<std::uint64_t>(v, top) - 1] += 1.0;
    }
    std::vector<double> probs(top, 0.0);
    double tail = 1.0;
    for (std::size_t k = 1; k < top; ++k) {
        probs[k - 1] = 1.0 / (double(k) * double(k + 1));
        tail -= probs[k - 1];
    }
    probs[top - 1] = tail;
    EXPECT_NEAR(probs[0], 0.5, 1e-15);
    EXPECT_NEAR(probs[1], 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(probs[2], 1.0 / 12.0, 1e-15);
    const auto chi = chi_square_gof(counts, probs);
    EXPECT_GT(chi.p_value, 0.001);
}

TEST(Cluster, GeneralRejectionMatchesYuleClosedForm) {
    BranchingConfig cfg;
    RandomStream rng(121, 122, 123);
    const int n = 30000;
    const std::size_t top = 21;
    std::vector<double> counts(top, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto v = sample_cluster_size(cfg, rng, ClusterMethod::GeneralRejection);
        ASSERT_GE(v, 1u);
        counts[std::min<std::uint64_t>(v, top) - 1] += 1.0;
    }
    std::vector<double> probs(top, 0.0);
    double tail = 1.0;
    for (std::size_t k = 1; k < top; ++k) {
        probs[k - 1] = 1.0 / (double(k) * double(k + 1));
        tail -= probs[k - 1];
    }
    probs[top - 1] = tail;
    const auto chi = chi_square_gof(counts, probs);
    EXPECT_GT(chi.p_value, 0.001);
}

TEST(Cluster, BinaryLawMatchesKolmogorovOde) {
    BranchingConfig cfg{1.0, kBinary};
    const std::size_t kmax = 16;
    const auto pmf = cluster_pmf_by_ode(cfg, kmax);
    RandomStream rng(131, 132, 133);
    const int n = 50000;
    std::vector<double> counts(kmax + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto v = sample_cluster_size(cfg, rng);
        counts[std::min<std::uint64_t>(v, kmax + 1) - 1] += 1.0;
    }
    std::vector<double> probs(kmax + 1, 0.0);
    double tail = 1.0;
    for (std::size_t k = 1; k <= kmax; ++k) {
        probs[k - 1] = pmf[k];
        tail -= pmf[k];
    }
    probs[kmax] = tail;
    ASSERT_GT(tail, 0.0);
    const auto chi = chi_square_gof(counts, probs);
    EXPECT_GT(chi.p_value, 0.001);
}

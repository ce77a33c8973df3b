#pragma once

// Continuous-time Galton-Watson machinery: offspring laws, extinction
// probability, population-size simulation, the martingale limit W, the
// constant vartheta and size-biased cluster sizes T.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "random.hpp"

namespace blex {

struct OffspringLaw {
    std::vector<double> probs; // probs[k] = P(k children), k = 0..K, K <= 64

    static OffspringLaw yule() { return {{0.0, 0.0, 1.0}}; }

    void validate() const {
        if (probs.empty() || probs.size() > 65)
            throw std::invalid_argument("offspring: need 1..65 probabilities (max arity 64)");
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0)) throw std::invalid_argument("offspring: probabilities must be >= 0");
            sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("offspring: probabilities must sum to 1");
    }

    double mean() const {
        double m = 0.0;
        for (std::size_t k = 1; k < probs.size(); ++k) m += double(k) * probs[k];
        return m;
    }

    // f(s) = sum_k p_k s^k
    double generating(double s) const {
        double acc = 0.0;
        for (std::size_t k = probs.size(); k-- > 0;) acc = acc * s + probs[k];
        return acc;
    }

    double generating_derivative(double s) const {
        double acc = 0.0;
        for (std::size_t k = probs.size(); k-- > 1;) acc = acc * s + double(k) * probs[k];
        return acc;
    }

    bool is_yule() const {
        return probs.size() == 3 && probs[0] == 0.0 && probs[1] == 0.0 && probs[2] == 1.0;
    }

    std::uint32_t sample(RandomStream& rng) const {
        double u = rng.u01();
        for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
            if (u < probs[k]) return std::uint32_t(k);
            u -= probs[k];
        }
        return std::uint32_t(probs.size() - 1);
    }
};

// Smallest fixed point of f on [0,1]; equals 1 iff the law is (sub)critical.
inline double extinction_probability(const OffspringLaw& law) {
    law.validate();
    if (law.probs[0] == 0.0) return 0.0;
    if (law.mean() <= 1.0) return 1.0; // (sub)critical: the tangent root, exactly 1
    double q = 0.0;
    for (int i = 0; i < 256; ++i) q = law.generating(q); // monotone from below
    for (int i = 0; i < 64; ++i) {
        const double g = law.generating(q) - q;
        const double dg = law.generating_derivative(q) - 1.0;
        if (dg == 0.0) break;
        const double next = q - g / dg;
        if (!(next >= 0.0 && next <= 1.0)) break;
        if (std::fabs(next - q) <= 1e-16 * (1.0 + q)) {
            q = next;
            break;
        }
        q = next;
    }
    return q;
}

struct BranchingConfig {
    double beta = 1.0; // exponential lifetime rate
    OffspringLaw offspring = OffspringLaw::yule();

    double lambda() const { return beta * (offspring.mean() - 1.0); }

    void validate() const {
        if (!(beta > 0.0)) throw std::invalid_argument("branching.beta: must be positive");
        offspring.validate();
        if (!(offspring.mean() > 1.0))
            throw std::invalid_argument("offspring: mean must exceed 1 (supercritical)");
    }
};

enum class PopulationMethod { Auto, EventDriven, YuleClosedForm };

inline constexpr std::uint64_t kPopulationCap = 100'000'000;

// Number alive at time t, starting from one particle at time 0. The Yule
// closed form Z_t ~ Geometric(e^{-beta t}) on {1,2,...} skips the event loop.
inline std::uint64_t simulate_population(const BranchingConfig& cfg, double t, RandomStream& rng,
                                         PopulationMethod method = PopulationMethod::Auto,
                                         std::uint64_t cap = kPopulationCap) {
    if (!(t >= 0.0)) throw std::invalid_argument("simulate_population: t >= 0 required");
    if (t == 0.0) return 1;
    if (method == PopulationMethod::YuleClosedForm ||
        (method == PopulationMethod::Auto && cfg.offspring.is_yule())) {
        if (!cfg.offspring.is_yule())
            throw std::invalid_argument("simulate_population: closed form needs the Yule law");
        const double p = std::exp(-cfg.beta * t);
        if (p < 1e-15) throw std::invalid_argument("simulate_population: horizon too large");
        const double z = rng.geometric1(p);
        return z > double(cap) ? cap : std::uint64_t(z);
    }
    std::uint64_t n = 1;
    double now = 0.0;
    while (n > 0) {
        now += rng.exponential(cfg.beta * double(n));
        if (now > t) break;
        n += cfg.offspring.sample(rng);
        n -= 1;
        if (n > cap) return cap;
    }
    return n;
}

// Extinction time of the whole population; +inf once extinction has become
// numerically impossible (q^n below survival_eps, bias at most survival_eps).
inline double simulate_extinction_time(const BranchingConfig& cfg, RandomStream& rng,
                                       double extinction_prob = -1.0,
                                       double survival_eps = 1e-12) {
    const double q = extinction_prob >= 0.0 ? extinction_prob
                                            : extinction_probability(cfg.offspring);
    const double inf = std::numeric_limits<double>::infinity();
    const double log_q = q > 0.0 ? std::log(q) : -inf;
    std::uint64_t n = 1;
    double now = 0.0;
    for (std::uint64_t events = 0; events < 1'000'000'000; ++events) {
        if (double(n) * log_q < std::log(survival_eps)) return inf;
        now += rng.exponential(cfg.beta * double(n));
        n += cfg.offspring.sample(rng);
        n -= 1;
        if (n == 0) return now;
    }
    throw std::runtime_error("simulate_extinction_time: event budget exhausted");
}

// W_t = Z_t e^{-lambda t}, an unbiased sample of the horizon-t approximation
// to the martingale limit (E W_t = 1 exactly for every t).
inline double sample_W(const BranchingConfig& cfg, double horizon, RandomStream& rng,
                       PopulationMethod method = PopulationMethod::Auto) {
    const std::uint64_t z = simulate_population(cfg, horizon, rng, method);
    return double(z) * std::exp(-cfg.lambda() * horizon);
}

// vartheta = int_0^infty e^{-lambda s} P(Z_s > 0) ds, estimated from the
// per-replication statistic (1 - e^{-lambda e}) / lambda where e is the
// extinction time (+inf on survival). With p_0 = 0 extinction never happens
// and the statistic is the constant 1/lambda.
inline double theta_constant(const BranchingConfig& cfg, std::uint64_t replications,
                             RandomStream& rng) {
    cfg.validate();
    const double lambda = cfg.lambda();
    if (cfg.offspring.probs[0] == 0.0) return 1.0 / lambda;
    const double q = extinction_probability(cfg.offspring);
    double acc = 0.0;
    for (std::uint64_t i = 0; i < replications; ++i) {
        const double e = simulate_extinction_time(cfg, rng, q);
        acc += std::isinf(e) ? 1.0 / lambda : -std::expm1(-lambda * e) / lambda;
    }
    return acc / double(replications);
}

enum class ClusterMethod { Auto, GeneralRejection, YuleClosedForm };

// Size-biased cluster size T: the population at an independent Exp(lambda)
// age, conditioned to be alive. For Yule, P(T = k) = 1/(k(k+1)) and
// T = floor(1/U). The general path resamples (age, population) jointly until
// the population is positive; the acceptance probability is lambda*vartheta.
inline std::uint64_t sample_cluster_size(const BranchingConfig& cfg, RandomStream& rng,
                                         ClusterMethod method = ClusterMethod::Auto,
                                         std::uint64_t cap = kPopulationCap) {
    if (method == ClusterMethod::YuleClosedForm ||
        (method == ClusterMethod::Auto && cfg.offspring.is_yule())) {
        if (!cfg.offspring.is_yule())
            throw std::invalid_argument("sample_cluster_size: closed form needs the Yule law");
        const double t = std::floor(1.0 / rng.u_open());
        return t > double(cap) ? cap : std::uint64_t(t);
    }
    const double lambda = cfg.lambda();
    for (int attempt = 0; attempt < 1'000'000; ++attempt) {
        const double age = rng.exponential(lambda);
        const std::uint64_t z =
            simulate_population(cfg, age, rng, PopulationMethod::EventDriven, cap);
        if (z > 0) return z;
    }
    throw std::runtime_error("sample_cluster_size: rejection cap exhausted");
}

} // namespace blex

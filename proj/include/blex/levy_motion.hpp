#pragma once

// Levy motions with regularly varying tails: strictly alpha-stable components,
// an optional Brownian part, and the non-symmetric 1-stable special case.
// Provides the exponent psi (E e^{i theta xi_s} = e^{s psi(theta)}), exact
// increment sampling, and first-order tail asymptotics.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <variant>
#include <vector>

#include "normalization.hpp"
#include "random.hpp"

namespace blex {

struct StableComponent {
    double alpha = 1.5; // stability index, in (0,2)
    double c1 = 1.0;    // Levy density c1 x^{-1-alpha} on (0,inf)
    double c2 = 1.0;    // Levy density c2 |x|^{-1-alpha} on (-inf,0)
    double a = 0.0;     // drift, used only when alpha == 1 (symmetric case)
};

struct BrownianComponent {
    double b = 1.0; // exponent contribution -b^2 theta^2 (variance 2 b^2 s)
};

// 1-stable with c1 != c2; psi(theta) = -(pi/2)(c1+c2) theta
//   - i (c1-c2) theta log theta + i a (c1-c2) theta for theta > 0.
struct OneStableAsymComponent {
    double c1 = 2.0;
    double c2 = 1.0;
    double a = 0.0;
};

using MotionComponent = std::variant<StableComponent, BrownianComponent, OneStableAsymComponent>;

namespace detail {
inline double component_tail_index(const MotionComponent& comp) {
    if (std::holds_alternative<StableComponent>(comp)) return std::get<StableComponent>(comp).alpha;
    if (std::holds_alternative<OneStableAsymComponent>(comp)) return 1.0;
    return 2.0; // Brownian: never determines the dominant index
}
} // namespace detail

struct MotionSpec {
    std::vector<MotionComponent> components;

    static MotionSpec stable(double alpha, double c1, double c2, double a = 0.0) {
        MotionSpec spec{{StableComponent{alpha, c1, c2, a}}};
        spec.validate();
        return spec;
    }
    static MotionSpec brownian(double b) {
        return {{BrownianComponent{b}}}; // valid only inside a composite; validate() rejects it alone
    }
    static MotionSpec one_stable_asym(double c1, double c2, double a = 0.0) {
        MotionSpec spec{{OneStableAsymComponent{c1, c2, a}}};
        spec.validate();
        return spec;
    }
    static MotionSpec composite(std::vector<MotionSpec> parts) {
        MotionSpec spec;
        for (auto& part : parts)
            for (auto& comp : part.components) spec.components.push_back(comp);
        spec.validate();
        return spec;
    }

    void validate() const {
        if (components.empty()) throw std::invalid_argument("motion: at least one component required");
        std::size_t heavy = 0;
        for (const auto& comp : components) {
            if (const auto* st = std::get_if<StableComponent>(&comp)) {
                if (!(st->alpha > 0.0 && st->alpha < 2.0))
                    throw std::invalid_argument("motion.alpha: must lie in (0,2)");
                if (!(st->c1 >= 0.0 && st->c2 >= 0.0))
                    throw std::invalid_argument("motion.c1/c2: must be >= 0");
                if (!(st->c1 + st->c2 > 0.0))
                    throw std::invalid_argument("motion.c1/c2: c1 + c2 must be positive");
                if (st->alpha == 1.0 && st->c1 != st->c2)
                    throw std::invalid_argument("motion: alpha = 1 stable requires c1 == c2 "
                                                "(use kind one-stable-asym otherwise)");
                ++heavy;
            } else if (const auto* br = std::get_if<BrownianComponent>(&comp)) {
                if (!(br->b > 0.0)) throw std::invalid_argument("motion.b: must be positive");
            } else {
                const auto& os = std::get<OneStableAsymComponent>(comp);
                if (!(os.c1 >= 0.0 && os.c2 >= 0.0))
                    throw std::invalid_argument("motion.c1/c2: must be >= 0");
                if (os.c1 == os.c2)
                    throw std::invalid_argument("motion: one-stable-asym requires c1 != c2 "
                                                "(the symmetric case is kind stable, alpha = 1)");
                ++heavy;
            }
        }
        if (heavy == 0)
            throw std::invalid_argument("motion: purely Brownian specs have no regularly varying tail");
        // Exactly one component may attain the minimal stability index.
        const std::size_t dom = dominant_index();
        const double amin = detail::component_tail_index(components[dom]);
        for (std::size_t i = 0; i < components.size(); ++i) {
            if (i == dom) continue;
            if (detail::component_tail_index(components[i]) == amin)
                throw std::invalid_argument("motion: the minimal stability index must be attained "
                                            "by exactly one component");
        }
    }

    std::size_t dominant_index() const {
        std::size_t best = components.size();
        double amin = 2.0;
        for (std::size_t i = 0; i < components.size(); ++i) {
            const double ai = detail::component_tail_index(components[i]);
            if (ai < amin) {
                amin = ai;
                best = i;
            }
        }
        if (best == components.size())
            throw std::invalid_argument("motion: purely Brownian specs have no regularly varying tail");
        return best;
    }
};

// psi(theta), with psi(-theta) = conj(psi(theta)) and psi(0) = 0.
inline std::complex<double> evaluate_psi(const MotionSpec& spec, double theta) {
    if (theta == 0.0) return {0.0, 0.0};
    if (theta < 0.0) return std::conj(evaluate_psi(spec, -theta));
    std::complex<double> psi{0.0, 0.0};
    for (const auto& comp : spec.components) {
        if (const auto* st = std::get_if<StableComponent>(&comp)) {
            if (st->alpha == 1.0) {
                psi += std::complex<double>(-pi_v * st->c1 * theta, st->a * theta);
            } else {
                psi -= stable_psi_coefficient(st->alpha, st->c1, st->c2) * std::pow(theta, st->alpha);
            }
        } else if (const auto* br = std::get_if<BrownianComponent>(&comp)) {
            psi += std::complex<double>(-br->b * br->b * theta * theta, 0.0);
        } else {
            const auto& os = std::get<OneStableAsymComponent>(comp);
            const double diff = os.c1 - os.c2;
            psi += std::complex<double>(-0.5 * pi_v * (os.c1 + os.c2) * theta,
                                        diff * theta * (os.a - std::log(theta)));
        }
    }
    return psi;
}

// Scaling limit data of the dominant component: index alpha*, one-sided
// densities (q1, q2) of v_alpha, and L == 1 (stable motions have exact
// power tails). For stable components the q's are recovered through solve_q
// from c_*; for the non-symmetric 1-stable the limit measure is the Levy
// measure itself.
inline TailScale limit_tail_scale(const MotionSpec& spec) {
    spec.validate();
    const auto& dom = spec.components[spec.dominant_index()];
    TailScale scale;
    scale.L = SlowlyVarying::one();
    if (const auto* st = std::get_if<StableComponent>(&dom)) {
        scale.alpha = st->alpha;
        const auto c_star = stable_psi_coefficient(st->alpha, st->c1, st->c2, st->a);
        std::tie(scale.q1, scale.q2) = solve_q(c_star, st->alpha);
    } else {
        const auto& os = std::get<OneStableAsymComponent>(dom);
        scale.alpha = 1.0;
        scale.q1 = os.c1;
        scale.q2 = os.c2;
    }
    return scale;
}

struct TailEstimate {
    double value = 0.0;
    bool asymptotic = true; // false: rigorous upper bound, not an equivalent
};

// First-order tail. Stable-dominated motions: P(|xi_s| >= x) ~ ((q1+q2)/alpha) s x^{-alpha}.
// Non-symmetric 1-stable: an explicit upper bound (no asymptote is available),
// from P(|X| >= 2/u) <= u^{-1} int_{-u}^{u} |1 - phi_s| and |1 - e^{s psi}| <= s|psi|:
//   P(|xi_s| > x) <= (2s/x) [ (pi/2)(c1+c2) + |c1-c2| (|a| + 1/2 + log(x/2)) ].
inline TailEstimate tail_asymptote(const MotionSpec& spec, double s, double x) {
    if (!(s > 0.0)) throw std::invalid_argument("tail_asymptote: s > 0 required");
    if (!(x > 0.0)) throw std::invalid_argument("tail_asymptote: x > 0 required");
    const auto& dom = spec.components[spec.dominant_index()];
    if (const auto* os = std::get_if<OneStableAsymComponent>(&dom)) {
        if (!(x > std::exp(1.0)))
            throw std::invalid_argument("tail_asymptote: the 1-stable bound needs x > e");
        const double sum = os->c1 + os->c2;
        const double diff = std::fabs(os->c1 - os->c2);
        const double value =
            2.0 * s / x * (0.5 * pi_v * sum + diff * (std::fabs(os->a) + 0.5 + std::log(0.5 * x)));
        return {value, false};
    }
    const TailScale scale = limit_tail_scale(spec);
    return {(scale.q1 + scale.q2) / scale.alpha * s * std::pow(x, -scale.alpha), true};
}

// Exact increment sampler. Chambers-Mallows-Stuck under the hood; the
// conversion from (alpha, c1, c2) to the CMS scale/skewness is
//   sigma^alpha = (Gamma(1-alpha)/alpha) cos(pi alpha/2) (c1 + c2),
//   beta_skew   = (c1 - c2)/(c1 + c2),
// matching psi(theta) = -sigma^alpha theta^alpha (1 - i beta_skew tan(pi alpha/2))
// for theta > 0 (both Gamma(1-alpha) and cos(pi alpha/2) flip sign at alpha = 1,
// so sigma^alpha stays positive). alpha = 1 symmetric is Cauchy with scale
// pi c1 s plus drift a s. The non-symmetric 1-stable uses the alpha = 1 CMS
// form for scale sigma_s = s (pi/2)(c1+c2) plus the location correction
// (2/pi) beta_skew sigma_s log sigma_s + s a (c1-c2), which restores the
// theta log theta term under time scaling.
class MotionSampler {
  public:
    explicit MotionSampler(const MotionSpec& spec) {
        spec.validate();
        for (const auto& comp : spec.components) plans_.push_back(make_plan(comp));
    }

    double sample(double s, RandomStream& rng) const {
        if (!(s >= 0.0)) throw std::invalid_argument("sample_increment: s >= 0 required");
        if (s == 0.0) return 0.0;
        double total = 0.0;
        for (const auto& plan : plans_) total += draw(plan, s, rng);
        return total;
    }

  private:
    enum class Kind { StableGeneral, Cauchy, Brownian, OneStableAsym };

    struct Plan {
        Kind kind;
        double alpha = 0.0;
        double sigma = 0.0;     // CMS scale per unit time (alpha != 1: scales as s^{1/alpha})
        double beta_skew = 0.0;
        double cms_b = 0.0;     // arctan(beta tan(pi alpha/2)) / alpha
        double cms_s = 0.0;     // (1 + beta^2 tan^2(pi alpha/2))^{1/(2 alpha)}
        double drift = 0.0;     // per unit time
    };

    static Plan make_plan(const MotionComponent& comp) {
        Plan plan{};
        if (const auto* st = std::get_if<StableComponent>(&comp)) {
            if (st->alpha == 1.0) {
                plan.kind = Kind::Cauchy;
                plan.sigma = pi_v * st->c1;
                plan.drift = st->a;
                return plan;
            }
            plan.kind = Kind::StableGeneral;
            plan.alpha = st->alpha;
            const double half_tan = std::tan(0.5 * pi_v * st->alpha);
            const double sigma_pow =
                stable_gamma_factor(st->alpha) * std::cos(0.5 * pi_v * st->alpha) * (st->c1 + st->c2);
            plan.sigma = std::pow(sigma_pow, 1.0 / st->alpha);
            plan.beta_skew = (st->c1 - st->c2) / (st->c1 + st->c2);
            plan.cms_b = std::atan(plan.beta_skew * half_tan) / st->alpha;
            plan.cms_s = std::pow(1.0 + plan.beta_skew * plan.beta_skew * half_tan * half_tan,
                                  0.5 / st->alpha);
            return plan;
        }
        if (const auto* br = std::get_if<BrownianComponent>(&comp)) {
            plan.kind = Kind::Brownian;
            plan.sigma = br->b;
            return plan;
        }
        const auto& os = std::get<OneStableAsymComponent>(comp);
        plan.kind = Kind::OneStableAsym;
        plan.sigma = 0.5 * pi_v * (os.c1 + os.c2);
        plan.beta_skew = (os.c1 - os.c2) / (os.c1 + os.c2);
        plan.drift = os.a * (os.c1 - os.c2);
        return plan;
    }

    static double draw(const Plan& plan, double s, RandomStream& rng) {
        switch (plan.kind) {
        case Kind::Brownian:
            return plan.sigma * std::sqrt(2.0 * s) * rng.normal();
        case Kind::Cauchy: {
            const double theta = pi_v * (rng.u_open() - 0.5);
            return plan.drift * s + plan.sigma * s * std::tan(theta);
        }
        case Kind::StableGeneral: {
            const double theta = pi_v * (rng.u_open() - 0.5);
            const double expo = rng.exponential();
            const double shifted = plan.alpha * (theta + plan.cms_b);
            const double core = plan.cms_s * std::sin(shifted) /
                                std::pow(std::cos(theta), 1.0 / plan.alpha) *
                                std::pow(std::cos(theta - shifted) / expo,
                                         (1.0 - plan.alpha) / plan.alpha);
            return plan.sigma * std::pow(s, 1.0 / plan.alpha) * core;
        }
        case Kind::OneStableAsym: {
            const double theta = pi_v * (rng.u_open() - 0.5);
            const double expo = rng.exponential();
            const double half_pi = 0.5 * pi_v;
            const double shifted = half_pi + plan.beta_skew * theta;
            const double core =
                (shifted * std::tan(theta) -
                 plan.beta_skew * std::log(half_pi * expo * std::cos(theta) / shifted)) /
                half_pi;
            const double sigma_s = plan.sigma * s;
            return sigma_s * core +
                   plan.beta_skew * sigma_s * std::log(sigma_s) / half_pi +
                   plan.drift * s;
        }
        }
        return 0.0;
    }

    std::vector<Plan> plans_;
};

inline double sample_increment(const MotionSpec& spec, double s, RandomStream& rng) {
    return MotionSampler(spec).sample(s, rng);
}

} // namespace blex

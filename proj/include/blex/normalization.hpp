#pragma once

// Space-time normalization h_t = inf{x > 0 : x^{-alpha} L(x) <= e^{-lambda t}},
// the limit measure v_alpha, and the linear system tying its one-sided
// densities (q1, q2) to the small-frequency coefficient c_* of the motion.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace blex {

inline constexpr double pi_v = 3.14159265358979323846;

// Slowly varying factor L in the tail x^{-alpha} L(x). Supported family:
// L == 1 and L(x) = (log(e + x))^p.
struct SlowlyVarying {
    enum class Kind { One, LogPow };
    Kind kind = Kind::One;
    double exponent = 0.0;

    static SlowlyVarying one() { return {Kind::One, 0.0}; }
    static SlowlyVarying log_pow(double p) {
        if (!(std::fabs(p) <= 8.0)) throw std::invalid_argument("SlowlyVarying: |exponent| <= 8 required");
        return {Kind::LogPow, p};
    }

    double operator()(double x) const {
        if (kind == Kind::One) return 1.0;
        return std::pow(std::log(std::exp(1.0) + x), exponent);
    }
    bool is_one() const { return kind == Kind::One; }
};

struct TailScale {
    double alpha = 1.0;
    double q1 = 0.0;
    double q2 = 0.0;
    SlowlyVarying L = SlowlyVarying::one();
};

// Gamma(1-alpha)/alpha = -Gamma(-alpha); the constant in
// psi(theta) = -(Gamma(1-alpha)/alpha) (c1 e^{-i pi alpha/2} + c2 e^{i pi alpha/2}) theta^alpha.
inline double stable_gamma_factor(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0) || alpha == 1.0)
        throw std::invalid_argument("stable_gamma_factor: alpha in (0,2), alpha != 1");
    return std::tgamma(1.0 - alpha) / alpha;
}

// Forward map (alpha, c1, c2[, a]) -> c_* with psi(theta) ~ -c_* theta^alpha as theta -> 0+.
// For alpha = 1 the symmetric case requires c1 == c2 and gives c_* = c1 pi - i a.
inline std::complex<double> stable_psi_coefficient(double alpha, double c1, double c2, double a = 0.0) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("stable_psi_coefficient: alpha in (0,2)");
    if (alpha == 1.0) {
        if (c1 != c2) throw std::invalid_argument("stable_psi_coefficient: alpha=1 requires c1 == c2");
        return {pi_v * c1, -a};
    }
    const double half = 0.5 * pi_v * alpha;
    const std::complex<double> phase(std::cos(half), -std::sin(half));
    return stable_gamma_factor(alpha) * (c1 * phase + c2 * std::conj(phase));
}

// Inverse map: recover (q1, q2) from c_*. Tiny negative solutions are clamped
// to zero, anything materially negative is rejected.
inline std::pair<double, double> solve_q(std::complex<double> c_star, double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("solve_q: alpha in (0,2)");
    double q1, q2;
    if (alpha == 1.0) {
        if (!(c_star.real() > 0.0)) throw std::invalid_argument("solve_q: alpha=1 needs Re(c_*) > 0");
        q1 = q2 = c_star.real() / pi_v;
        return {q1, q2};
    }
    const double factor = stable_gamma_factor(alpha);
    const double half = 0.5 * pi_v * alpha;
    const double sum = c_star.real() / (factor * std::cos(half));
    const double diff = c_star.imag() / (factor * std::sin(half)); // q2 - q1
    q1 = 0.5 * (sum - diff);
    q2 = 0.5 * (sum + diff);
    const double tol = 1e-12 * std::max(1.0, std::fabs(sum));
    if (q1 < -tol || q2 < -tol)
        throw std::invalid_argument("solve_q: c_star implies a negative tail density");
    if (q1 < 0.0) q1 = 0.0;
    if (q2 < 0.0) q2 = 0.0;
    return {q1, q2};
}

// h_t. Closed form e^{lambda t / alpha} when L == 1; otherwise the first
// crossing of g(x) = x^{-alpha} L(x) below e^{-lambda t}, located by a
// doubling scan plus bisection.
inline double compute_h(double lambda, double alpha, const SlowlyVarying& L, double t) {
    if (!(lambda > 0.0)) throw std::invalid_argument("compute_h: lambda > 0 required");
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("compute_h: alpha in (0,2) required");
    if (!(t >= 0.0)) throw std::invalid_argument("compute_h: t >= 0 required");
    if (L.is_one()) return std::exp(lambda * t / alpha);

    const double target = std::exp(-lambda * t);
    const auto g = [&](double x) { return std::pow(x, -alpha) * L(x); };

    double lo = 1e-9;
    if (!(g(lo) > target))
        throw std::runtime_error("compute_h: g already below the threshold at the scan origin");
    double hi = lo;
    for (int i = 0; i < 2000 && g(hi) > target; ++i) hi *= 1.25;
    if (g(hi) > target) throw std::runtime_error("compute_h: failed to bracket the crossing");
    lo = hi / 1.25;

    for (int i = 0; i < 200 && (hi - lo) > 1e-14 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > target ? lo : hi) = mid;
    }
    const double h = 0.5 * (lo + hi);

    // The inf definition needs g decreasing through the crossing; a strongly
    // increasing L can break that, which we refuse to paper over.
    const double span = std::max(hi - lo, 1e-9 * h);
    if (!(g(h - 4.0 * span) >= g(h) && g(h) >= g(h + 4.0 * span)))
        throw std::runtime_error("compute_h: g(x) = x^{-alpha} L(x) is not monotone near the crossing");
    return h;
}

inline double compute_h(double lambda, const TailScale& scale, double t) {
    return compute_h(lambda, scale.alpha, scale.L, t);
}

// v_alpha(dx) = q1 x^{-1-alpha} dx on (0,inf) + q2 |x|^{-1-alpha} dx on (-inf,0).
// Interval mass; endpoints may be +-infinity, the interval must stay on one
// side of 0 (the measure is infinite near the origin).
inline double v_alpha_interval(const TailScale& scale, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("v_alpha_interval: need lo < hi");
    const double a = scale.alpha;
    const auto one_side = [&](double q, double inner, double outer) {
        // mass of {inner <= |x| <= outer} on one side, 0 < inner < outer <= inf
        const double top = std::isinf(outer) ? 0.0 : std::pow(outer, -a);
        return q / a * (std::pow(inner, -a) - top);
    };
    if (lo >= 0.0) {
        if (lo == 0.0) throw std::invalid_argument("v_alpha_interval: infinite mass at 0+");
        return one_side(scale.q1, lo, hi);
    }
    if (hi <= 0.0) {
        if (hi == 0.0) throw std::invalid_argument("v_alpha_interval: infinite mass at 0-");
        return one_side(scale.q2, -hi, -lo);
    }
    throw std::invalid_argument("v_alpha_interval: interval must not contain 0");
}

// v_alpha({|x| >= a}).
inline double v_alpha_two_sided_tail(const TailScale& scale, double a) {
    if (!(a > 0.0)) throw std::invalid_argument("v_alpha_two_sided_tail: a > 0 required");
    return (scale.q1 + scale.q2) / scale.alpha * std::pow(a, -scale.alpha);
}

} // namespace blex

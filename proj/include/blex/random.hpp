#pragma once

// Counter-derived random streams. Every replication gets its own stream,
// derived from (master seed, purpose tag, replication index), so results do
// not depend on how replications are distributed over worker threads.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace blex {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

// FNV-1a, used to turn purpose strings ("verify-max/t=8") into stream tags.
inline std::uint64_t purpose_tag(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// xoshiro256++ with splitmix64 seeding.
class RandomStream {
  public:
    using result_type = std::uint64_t;

    RandomStream() : RandomStream(0, 0, 0) {}

    RandomStream(std::uint64_t master_seed, std::uint64_t purpose, std::uint64_t index) {
        std::uint64_t chain = master_seed;
        detail::splitmix64(chain);
        chain ^= purpose;
        detail::splitmix64(chain);
        chain ^= index;
        for (auto& word : s_) word = detail::splitmix64(chain);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9E3779B97F4A7C15ull;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl64(s_[3], 45);
        return result;
    }

    // Uniform on [0,1), 53 bits.
    double u01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0,1); safe under log().
    double u_open() { return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52; }

    double exponential(double rate = 1.0) { return -std::log(u_open()) / rate; }

    double normal() {
        const double r = std::sqrt(-2.0 * std::log(u_open()));
        const double phi = 6.283185307179586476925287 * u01();
        return r * std::cos(phi);
    }

    // Exact for any mean: counts unit-rate arrivals in [0, mean]. O(mean).
    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be >= 0");
        if (mean > 1e7) throw std::invalid_argument("poisson: mean too large for exact sampling");
        std::uint64_t k = 0;
        double acc = exponential();
        while (acc <= mean) {
            ++k;
            acc += exponential();
        }
        return k;
    }

    // Geometric on {1,2,...} with success probability p: P(K=k) = p(1-p)^{k-1}.
    double geometric1(double p) {
        if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("geometric1: p must be in (0,1]");
        if (p == 1.0) return 1.0;
        return 1.0 + std::floor(std::log(u_open()) / std::log1p(-p));
    }

  private:
    std::uint64_t s_[4];
};

} // namespace blex

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "sladoa/errors.hpp"

namespace sladoa {

// Reproducibility contract: every random draw in the library goes through
// RngStream, and every logical unit of work (dataset sample, Monte-Carlo
// trial, per-epoch mask, weight tensor) owns its own stream derived from
// (master seed, domain, index). Streams are independent of thread count and
// of the order in which work items execute. Distributions are implemented
// here rather than taken from <random> because the standard does not pin
// down distribution algorithms, only engines.

/// Domain tags keeping unrelated substreams decorrelated under one seed.
enum class RngDomain : std::uint64_t {
    dataset_sample = 1,
    dataset_validation = 2,
    trial = 3,
    train_shuffle = 4,
    train_mask = 5,
    validation_mask = 6,
    weight_init = 7,
    capture_demo = 8,
    general = 9,
};

namespace detail {
// splitmix64 step; used only to derive seeds for the mt19937_64 engine.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace detail

/// Seeded random stream with explicitly specified distributions.
class RngStream {
public:
    RngStream(std::uint64_t seed, RngDomain domain, std::uint64_t index) {
        std::uint64_t s = seed;
        detail::splitmix64(s);
        s ^= static_cast<std::uint64_t>(domain) * 0xd1342543de82ef95ULL;
        detail::splitmix64(s);
        s ^= index * 0xaf251af3b0f025b5ULL;
        engine_.seed(detail::splitmix64(s));
    }

    explicit RngStream(std::uint64_t seed) : RngStream(seed, RngDomain::general, 0) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer on [0, n); unbiased by rejection.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw numeric_error("uniform_index: empty range");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    /// Standard normal pair via Box-Muller (consumes exactly two uniforms).
    std::pair<double, double> normal_pair() {
        const double u1 = 1.0 - uniform01(); // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    /// k distinct indices from [0, n), uniform over subsets, in draw order.
    std::vector<std::size_t> distinct_indices(std::size_t n, std::size_t k) {
        if (k > n) throw numeric_error("distinct_indices: k exceeds n");
        // Partial Fisher-Yates over an explicit index pool.
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<std::size_t> out(k);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_index(n - i));
            std::swap(pool[i], pool[j]);
            out[i] = pool[i];
        }
        return out;
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace sladoa

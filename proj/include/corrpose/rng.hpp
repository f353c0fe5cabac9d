#pragma once

#include <cmath>
#include <cstdint>

namespace corrpose {

// splitmix64 step; also used standalone to derive per-frame seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base ^ (0x9E3779B97F4A7C15ull * (stream + 1));
    return splitmix64(s);
}

// Small deterministic generator. The standard <random> distributions are not
// pinned across library versions, so sampling is done by hand here; outputs
// depend only on the seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // avoid the all-zero fixed point and decorrelate nearby seeds
        next_u64();
        next_u64();
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0, n), n > 0
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // standard normal, Box-Muller (pair cached)
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double sigma) { return sigma * normal(); }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace corrpose

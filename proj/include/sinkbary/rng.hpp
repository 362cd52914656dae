#ifndef SINKBARY_RNG_HPP
#define SINKBARY_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace sinkbary {

// Deterministic sub-stream RNG: one user-facing seed, independent streams
// derived from (seed, stream name, index). Gaussian draws use Box-Muller so
// sequences do not depend on the standard library's distribution internals.
class Rng {
  public:
    Rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0)
        : gen_(mix(seed ^ fnv1a(stream), index)) {}

    double uniform() {
        // 53-bit mantissa draw in [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // index in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= lim);
        return x % n;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t raw() { return gen_(); }

  private:
    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

    static std::uint64_t splitmix(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::mt19937_64 mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t s = a + 0x632be59bd9b4e019ull * (b + 1);
        const std::uint64_t w0 = splitmix(s);
        const std::uint64_t w1 = splitmix(s);
        return std::mt19937_64(w0 ^ (w1 << 1));
    }

    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace sinkbary

#endif

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace esim {

/// Mixes a master seed with stream indices so that parallel replicas get
/// decorrelated, order-independent RNG streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t s = mix(master);
    s = mix(s ^ mix(a + 1));
    s = mix(s ^ mix(b + 2));
    s = mix(s ^ mix(c + 3));
    return s;
}

/// Deterministic RNG used everywhere in the simulator. All samplers are
/// implemented here (rather than via std::*_distribution) so that a given
/// seed produces the same trajectory on every platform and compiler.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), n >= 1.
    std::uint64_t uniform_below(std::uint64_t n) {
        // Rejection sampling keeps the draw exactly uniform.
        std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
        for (;;) {
            std::uint64_t r = gen_();
            if (r >= threshold) return r % n;
        }
    }

    /// Poisson sample by inversion; fine for the arrival means used here.
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        double u = uniform01();
        double p = std::exp(-mean);
        double cdf = p;
        int k = 0;
        while (u > cdf && k < 1000000) {
            ++k;
            p *= mean / k;
            cdf += p;
        }
        return k;
    }

    /// Exponential with the given rate.
    double exponential(double rate) {
        return -std::log(1.0 - uniform01()) / rate;
    }

    /// Standard normal via Box-Muller (no cached spare, for reproducibility).
    double gaussian() {
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace esim

#pragma once

#include <cmath>
#include <cstdint>

namespace bus {

/// Deterministic RNG (splitmix64 core). Self-contained so that streams are
/// reproducible byte-for-byte across platforms and standard libraries;
/// std::*_distribution implementations are not portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ULL) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi], inclusive. Unbiased (rejection sampling).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t n = static_cast<std::uint64_t>(hi - lo) + 1;
        if (n == 0) return lo + static_cast<std::int64_t>(next_u64());  // full 64-bit range
        const std::uint64_t reject_below = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            const unsigned __int128 m = static_cast<unsigned __int128>(r) * n;
            if (static_cast<std::uint64_t>(m) >= reject_below)
                return lo + static_cast<std::int64_t>(m >> 64);
        }
    }

    /// Standard normal via Box-Muller (caches the spare value).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Independent child stream; distinct ids give decorrelated streams.
    Rng fork(std::uint64_t stream_id) const {
        Rng child(state_ ^ (0xd1342543de82ef95ULL * (stream_id + 1)));
        child.next_u64();
        return child;
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace bus

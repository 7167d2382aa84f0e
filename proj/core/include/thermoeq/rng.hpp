#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace thermoeq {

// Deterministic random numbers. The engine (std::mt19937_64) is bit-exact per
// the standard; the distributions below are written out by hand because the
// standard library's are implementation-defined and would break cross-platform
// reproducibility of seeded runs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    /// uniform in the open interval (0, 1)
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// uniform in [lo, hi)
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
    }

    /// standard normal via Box-Muller; second member of each pair is cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Stable sub-seed for a named purpose ("match", "study-ik", ...) and integer labels,
/// so independent runs inside one study never share an RNG stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = detail::splitmix64(base);
    for (char c : purpose)
        h = detail::splitmix64(h ^ static_cast<unsigned char>(c));
    h = detail::splitmix64(h ^ a);
    h = detail::splitmix64(h ^ b);
    return h;
}

} // namespace thermoeq

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace steindiff {

/// splitmix64 mixing step; used only to derive substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives the seed of substream `counter` from a base seed. Distinct
/// counters give statistically independent streams, so parallel loops can
/// hand substream `i` to iteration `i` and results do not depend on thread
/// scheduling.
inline std::uint64_t substream_seed(std::uint64_t base_seed, std::uint64_t counter) {
    return mix64(mix64(base_seed) ^ mix64(counter * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL));
}

/// Random stream with a portable normal sampler. mt19937_64 has a
/// standard-specified sequence and the Box-Muller transform below only uses
/// elementary functions, so identical seeds give bitwise-identical draws on
/// any conforming platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on the open interval (0,1); never returns 0 or 1.
    double uniform01() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal draw (Box-Muller, pairwise).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    void normal_fill(std::span<double> out) {
        for (double& v : out) v = normal();
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace steindiff

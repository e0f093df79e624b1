#pragma once

#include <cstdint>

namespace optctl::rng {

// SplitMix64 finalizer. Stateless: output depends only on the input word.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in (0, 1]; never returns 0 so log() is safe.
constexpr double to_unit(std::uint64_t x) {
    return (static_cast<double>(x >> 11) + 1.0) * 0x1p-53;
}

// Counter-based standard normal draw keyed by (seed, index). Two calls with
// the same key give bit-identical values regardless of call order.
double gaussian(std::uint64_t seed, std::uint64_t index);

// Uniform in [lo, hi) keyed the same way.
double uniform(std::uint64_t seed, std::uint64_t index, double lo, double hi);

// Sequential linear congruential generator (Knuth MMIX constants), used for
// reproducible weight initialization.
class Lcg {
  public:
    explicit Lcg(std::uint64_t seed) : state_(splitmix64(seed)) {}

    std::uint64_t next() {
        state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
        return state_;
    }

    // Uniform in (0, 1].
    double next_unit() { return to_unit(next()); }

    // Uniform in [-a, a].
    double next_symmetric(double a) { return a * (2.0 * next_unit() - 1.0); }

  private:
    std::uint64_t state_;
};

}  // namespace optctl::rng

#include "optctl/rng.hpp"

#include <cmath>
#include <numbers>

namespace optctl::rng {

namespace {

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index ^ 0x5851f42d4c957f2dULL));
}

}  // namespace

double gaussian(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t key = mix_key(seed, index);
    const double u1 = to_unit(splitmix64(key));
    const double u2 = to_unit(splitmix64(key ^ 0xda942042e4dd58b5ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double uniform(std::uint64_t seed, std::uint64_t index, double lo, double hi) {
    const std::uint64_t key = mix_key(seed, index);
    return lo + (hi - lo) * (to_unit(splitmix64(key)) - 0x1p-53);
}

}  // namespace optctl::rng

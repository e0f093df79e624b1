#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "optctl/rng.hpp"

namespace testsupport {

using Complex = std::complex<double>;

// Independent expansion oracle: multiply out prod (s - r_i) and return real
// coefficients, ascending. Deliberately separate from the library path.
inline std::vector<double> expand_roots(const std::vector<Complex>& roots) {
    std::vector<Complex> coeffs{1.0};
    for (const Complex& r : roots) {
        std::vector<Complex> next(coeffs.size() + 1, 0.0);
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            next[i + 1] += coeffs[i];
            next[i] -= coeffs[i] * r;
        }
        coeffs = std::move(next);
    }
    std::vector<double> out(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        out[i] = coeffs[i].real();
    }
    return out;
}

// Deterministic uniform draw in [lo, hi].
inline double draw(std::uint64_t seed, std::uint64_t index, double lo, double hi) {
    return optctl::rng::uniform(seed, index, lo, hi);
}

// Plain O(n^2) DFT, enough for the 4096-sample spectral checks.
inline std::vector<Complex> dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<Complex> out(n);
    const double w = -2.0 * 3.14159265358979323846 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double angle = w * static_cast<double>(k) * static_cast<double>(t);
            acc += x[t] * Complex(std::cos(angle), std::sin(angle));
        }
        out[k] = acc;
    }
    return out;
}

// Fraction of one-sided spectral energy below the half-band split.
inline double lower_band_energy_fraction(const std::vector<double>& x) {
    const std::vector<Complex> spectrum = dft(x);
    const std::size_t half_spectrum = x.size() / 2;  // bins 0..N/2 are one side
    const std::size_t split = half_spectrum / 2;
    double lower = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k <= half_spectrum; ++k) {
        const double e = std::norm(spectrum[k]);
        total += e;
        if (k < split) {
            lower += e;
        }
    }
    return total > 0.0 ? lower / total : 0.0;
}

}  // namespace testsupport

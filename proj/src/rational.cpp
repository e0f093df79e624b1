#include "optctl/rational.hpp"

#include <algorithm>
#include <cmath>

#include "optctl/errors.hpp"

namespace optctl::tf {

namespace {

constexpr double kDenUnderflowGuard = 1e-300;

// Group nearby roots into (value, multiplicity) clusters. The tolerance is
// relative to the largest magnitude in the set.
void cluster_roots(const std::vector<Complex>& roots, std::vector<Complex>& values,
                   std::vector<int>& multiplicities) {
    double scale = 0.0;
    for (const Complex& r : roots) {
        scale = std::max(scale, std::abs(r));
    }
    const double tol_cluster = 1e-6 * (1.0 + scale);
    for (const Complex& r : roots) {
        bool merged = false;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (std::abs(r - values[i]) <= tol_cluster) {
                // Running mean keeps the representative centered on the cluster.
                const double n = static_cast<double>(multiplicities[i]);
                values[i] = (values[i] * n + r) / (n + 1.0);
                ++multiplicities[i];
                merged = true;
                break;
            }
        }
        if (!merged) {
            values.push_back(r);
            multiplicities.push_back(1);
        }
    }
}

}  // namespace

RationalTF::RationalTF() : num_{}, den_{1.0} {}

RationalTF::RationalTF(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) {
        throw ZeroPolynomialError("transfer function denominator is the zero polynomial");
    }
    const double lead = den_.leading();
    if (lead != 1.0) {
        num_ = num_.scaled(1.0 / lead);
        den_ = den_.scaled(1.0 / lead);
    }
}

RationalTF RationalTF::constant(double gain) { return RationalTF(Polynomial{gain}, Polynomial{1.0}); }

RationalTF RationalTF::integrator() { return RationalTF(Polynomial{1.0}, Polynomial{0.0, 1.0}); }

Complex RationalTF::eval_unchecked(Complex s) const { return num_.eval(s) / den_.eval(s); }

const char* to_string(StabilityTag tag) {
    switch (tag) {
        case StabilityTag::Stable:
            return "stable";
        case StabilityTag::MarginallyStable:
            return "marginally_stable";
        case StabilityTag::Unstable:
            return "unstable";
    }
    return "unknown";
}

RationalTF tf_series(const RationalTF& a, const RationalTF& b) {
    return RationalTF(a.num() * b.num(), a.den() * b.den());
}

RationalTF tf_parallel(const RationalTF& a, const RationalTF& b) {
    return RationalTF(a.num() * b.den() + b.num() * a.den(), a.den() * b.den());
}

RationalTF tf_feedback(const RationalTF& forward, const RationalTF& loop_gain) {
    // forward/(1 + forward*loop_gain) without cancellation:
    //   num = fn*ld,  den = fd*ld + fn*ln
    const Polynomial num = forward.num() * loop_gain.den();
    const Polynomial den = forward.den() * loop_gain.den() + forward.num() * loop_gain.num();
    if (den.is_zero()) {
        throw DegenerateLoopError();
    }
    return RationalTF(num, den);
}

PoleZeroSet tf_poles_zeros(const RationalTF& tf) {
    PoleZeroSet out;
    if (tf.den().degree() >= 1) {
        const std::vector<Complex> roots = poly_roots(tf.den());
        cluster_roots(roots, out.poles, out.pole_multiplicities);
    }
    if (tf.num().degree() >= 1) {
        out.zeros = poly_roots(tf.num());
    }
    return out;
}

StabilityClass classify_stability(const PoleZeroSet& pz) {
    StabilityClass out;
    if (pz.poles.empty()) {
        out.tag = StabilityTag::Stable;
        return out;
    }
    double scale = 0.0;
    for (const Complex& p : pz.poles) {
        scale = std::max(scale, std::abs(p));
    }
    const double tol_axis = 1e-9 * (1.0 + scale);

    // Unstable: strictly right of the axis band, or a repeated pole on it.
    for (std::size_t i = 0; i < pz.poles.size(); ++i) {
        const double re = pz.poles[i].real();
        if (re > tol_axis || (std::fabs(re) <= tol_axis && pz.pole_multiplicities[i] >= 2)) {
            out.tag = StabilityTag::Unstable;
            out.witness = pz.poles[i];
            return out;
        }
    }
    for (std::size_t i = 0; i < pz.poles.size(); ++i) {
        if (std::fabs(pz.poles[i].real()) <= tol_axis) {
            out.tag = StabilityTag::MarginallyStable;
            out.witness = pz.poles[i];
            return out;
        }
    }
    out.tag = StabilityTag::Stable;
    // Witness for the stable case: the rightmost pole (the binding one).
    std::size_t arg = 0;
    for (std::size_t i = 1; i < pz.poles.size(); ++i) {
        if (pz.poles[i].real() > pz.poles[arg].real()) {
            arg = i;
        }
    }
    out.witness = pz.poles[arg];
    return out;
}

Complex freq_eval(const RationalTF& tf, Complex s) {
    const Complex den_val = tf.den().eval(s);
    if (std::abs(den_val) < kDenUnderflowGuard) {
        throw PoleHitError();
    }
    return tf.num().eval(s) / den_val;
}

Complex gan_generator_branch(double theta_d_star, double opt_gain, Complex s,
                             QuadraticBranch branch) {
    if (opt_gain == 0.0) {
        throw InvalidConfigError("opt_gain", "must be nonzero");
    }
    if (s == Complex(0.0, 0.0)) {
        throw PoleHitError("generator branch has a pole at s = 0");
    }
    const Complex ratio = Complex(theta_d_star / opt_gain, 0.0);
    const Complex discriminant = ratio * ratio - 4.0 / s;
    const Complex root = std::sqrt(discriminant);  // principal branch
    return branch == QuadraticBranch::Plus ? 0.5 * (ratio + root) : 0.5 * (ratio - root);
}

}  // namespace optctl::tf

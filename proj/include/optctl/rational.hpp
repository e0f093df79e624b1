#pragma once

#include <optional>
#include <vector>

#include "optctl/polynomial.hpp"

namespace optctl::tf {

// Rational transfer function num(s)/den(s), normalized so the denominator is
// monic; the scalar gain lives in the numerator. The denominator may not be
// the zero polynomial. No pole/zero cancellation is ever performed:
// cancellation would mask marginal poles, which are the main diagnostic here.
class RationalTF {
  public:
    RationalTF();  // zero transfer function 0/1
    RationalTF(Polynomial num, Polynomial den);

    static RationalTF constant(double gain);
    // 1/s
    static RationalTF integrator();

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }

    Complex eval_unchecked(Complex s) const;

  private:
    Polynomial num_;
    Polynomial den_;
};

struct PoleZeroSet {
    std::vector<Complex> poles;            // one entry per distinct pole
    std::vector<int> pole_multiplicities;  // aligned with poles
    std::vector<Complex> zeros;            // with multiplicity, not grouped
};

enum class StabilityTag { Stable, MarginallyStable, Unstable };

struct StabilityClass {
    StabilityTag tag = StabilityTag::Stable;
    // The pole justifying the tag; empty when there are no poles at all.
    std::optional<Complex> witness;
};

const char* to_string(StabilityTag tag);

// Series composition a*b (cascade).
RationalTF tf_series(const RationalTF& a, const RationalTF& b);

// Parallel composition a+b over the common denominator.
RationalTF tf_parallel(const RationalTF& a, const RationalTF& b);

// Closed loop forward/(1 + forward*loop_gain). Throws DegenerateLoopError if
// the resulting denominator collapses to the zero polynomial.
RationalTF tf_feedback(const RationalTF& forward, const RationalTF& loop_gain);

// Poles/zeros with pole multiplicities grouped within a clustering tolerance
// relative to the largest pole magnitude. Degree-zero numerator/denominator
// contribute no zeros/poles.
PoleZeroSet tf_poles_zeros(const RationalTF& tf);

// Axis band is relative: tol_axis = 1e-9 * (1 + max pole magnitude), so a
// pole like -0.105 is never classified as on-axis while an exact 0 is.
StabilityClass classify_stability(const PoleZeroSet& pz);

// num(s)/den(s) by Horner evaluation. Throws PoleHitError when |den(s)|
// underflows the guard.
Complex freq_eval(const RationalTF& tf, Complex s);

enum class QuadraticBranch { Plus, Minus };

// Generator-side branch of the adversarial loop's quadratic:
//   g(s) = 1/2 * (T +- sqrt(T^2 - 4/s)),  T = theta_d_star / opt_gain,
// using the principal square root (branch cut on the negative real axis).
// The branch point sits where T^2 = 4/s; s = 0 is a pole and throws
// PoleHitError. Both branches satisfy g^2 - T*g + 1/s = 0.
Complex gan_generator_branch(double theta_d_star, double opt_gain, Complex s,
                             QuadraticBranch branch);

}  // namespace optctl::tf

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optctl/fuzzy.hpp"
#include "optctl/rational.hpp"

namespace optctl::ctrl {

enum class OptimizerKind { Sgd, Sgdm, Pid, Adam, LpfSgd, HpfSgd, FuzzyPid };

const char* to_string(OptimizerKind kind);
std::optional<OptimizerKind> kind_from_string(const std::string& name);

// Second-order IIR section, direct form with a normalized denominator
// (den[0] == 1). Output scale G multiplies the numerator taps only.
struct IIRCoeffs {
    double gain = 1.0;
    std::array<double, 3> num{1.0, 0.0, 0.0};
    std::array<double, 3> den{1.0, 0.0, 0.0};
};

// The published second-order coefficient pair for the half-band split. Both
// sections share G = 0.49968 and denominator {1, 0, -1}; they differ in the
// sign of the middle numerator tap. Named by measured frequency behavior:
// the +0.99937 tap accumulates (passes the low band), the -0.99937 tap
// differences (passes the high band).
IIRCoeffs half_band_lowpass();
IIRCoeffs half_band_highpass();

struct ControllerConfig {
    OptimizerKind kind = OptimizerKind::Sgd;
    double r = 0.01;      // learning rate, > 0
    double alpha = 0.9;   // momentum balance factor in [0, 1]
    double kp = 0.0;      // PID gains
    double ki = 0.0;
    double kd = 0.0;
    double beta1 = 0.9;   // adam decay rates in (0, 1)
    double beta2 = 0.999;
    double eps = 1e-8;    // adam stabilizer, > 0
    std::optional<IIRCoeffs> iir;          // present iff kind is LpfSgd/HpfSgd
    std::optional<fuzzy::FuzzyConfig> fuzzy;  // present iff kind is FuzzyPid

    static ControllerConfig sgd(double r);
    static ControllerConfig sgdm(double r, double alpha);
    static ControllerConfig pid(double r, double alpha, double kd);
    static ControllerConfig adam(double r = 0.001, double beta1 = 0.9, double beta2 = 0.999,
                                 double eps = 1e-8);
    static ControllerConfig lpf_sgd(double r);
    static ControllerConfig hpf_sgd(double r);
    static ControllerConfig fuzzy_pid(double r, double kp, double ki, double kd);

    // Throws InvalidConfigError naming the violated field.
    void validate() const;
};

struct ControllerState {
    double v = 0.0;          // momentum accumulator
    double d = 0.0;          // derivative accumulator
    double m = 0.0;          // adam first moment
    double vhat = 0.0;       // adam second moment
    std::int64_t t = 0;      // completed steps
    double prev_grad = 0.0;  // last gradient sample
    std::array<double, 2> delay_in{0.0, 0.0};   // IIR input delay line
    std::array<double, 2> delay_out{0.0, 0.0};  // IIR output delay line
    fuzzy::PidGains gains_hat;                  // current fuzzified gains

    // Warm-up statistics for the adaptive fuzzy universe.
    double warm_sum = 0.0;
    double warm_sumsq = 0.0;
    double phi_effective = 0.0;  // 0 until the warm-up recompute happens
};

// Zeroed state; fuzzified gains start at the base gains.
ControllerState ctrl_init(const ControllerConfig& cfg);

// One optimizer step. Returns the parameter increment (the caller adds it)
// and advances the state. Throws NonFiniteGradientError on NaN/Inf input.
double ctrl_step(const ControllerConfig& cfg, ControllerState& state, double grad);

// Total parameter change over a gradient sequence, computed directly from
// the per-kind summation formulas instead of the step recurrence. Supports
// Sgd/Sgdm/Pid/Adam; other kinds throw UnsupportedKindError.
double closed_form_iterate(const ControllerConfig& cfg, std::span<const double> grads);

// The adaptive scale of adam after at least one step, reconstructed from the
// stored second moment and step counter. Throws NotAdamError for other kinds.
double adam_adaptive_gain(const ControllerState& state, const ControllerConfig& cfg);

// Batch filter application, direct form II transposed, zero initial state.
std::vector<double> iir_apply(const IIRCoeffs& coeffs, std::span<const double> input);

// Laplace-domain description of the controller, used by stability analysis.
// Adam has no rational transfer function and throws NoTransferFunctionError.
// FuzzyPid is taken at its base (unmodified) gains.
tf::RationalTF controller_tf(const ControllerConfig& cfg);

}  // namespace optctl::ctrl

#include "optctl/controllers.hpp"

#include <cmath>

#include "optctl/errors.hpp"

namespace optctl::ctrl {

const char* to_string(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::Sgd:
            return "sgd";
        case OptimizerKind::Sgdm:
            return "sgdm";
        case OptimizerKind::Pid:
            return "pid";
        case OptimizerKind::Adam:
            return "adam";
        case OptimizerKind::LpfSgd:
            return "lpfsgd";
        case OptimizerKind::HpfSgd:
            return "hpfsgd";
        case OptimizerKind::FuzzyPid:
            return "fuzzypid";
    }
    return "unknown";
}

std::optional<OptimizerKind> kind_from_string(const std::string& name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "sgdm") return OptimizerKind::Sgdm;
    if (name == "pid") return OptimizerKind::Pid;
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "lpfsgd") return OptimizerKind::LpfSgd;
    if (name == "hpfsgd") return OptimizerKind::HpfSgd;
    if (name == "fuzzypid") return OptimizerKind::FuzzyPid;
    return std::nullopt;
}

IIRCoeffs half_band_lowpass() {
    return IIRCoeffs{0.49968, {1.0, 0.99937, 0.00063}, {1.0, 0.0, -1.0}};
}

IIRCoeffs half_band_highpass() {
    return IIRCoeffs{0.49968, {1.0, -0.99937, 0.00063}, {1.0, 0.0, -1.0}};
}

ControllerConfig ControllerConfig::sgd(double r) {
    ControllerConfig cfg;
    cfg.kind = OptimizerKind::Sgd;
    cfg.r = r;
    return cfg;
}

ControllerConfig ControllerConfig::sgdm(double r, double alpha) {
    ControllerConfig cfg;
    cfg.kind = OptimizerKind::Sgdm;
    cfg.r = r;
    cfg.alpha = alpha;
    return cfg;
}

ControllerConfig ControllerConfig::pid(double r, double alpha, double kd) {
    ControllerConfig cfg;
    cfg.kind = OptimizerKind::Pid;
    cfg.r = r;
    cfg.alpha = alpha;
    cfg.kd = kd;
    return cfg;
}

ControllerConfig ControllerConfig::adam(double r, double beta1, double beta2, double eps) {
    ControllerConfig cfg;
    cfg.kind = OptimizerKind::Adam;
    cfg.r = r;
    cfg.beta1 = beta1;
    cfg.beta2 = beta2;
    cfg.eps = eps;
    return cfg;
}

ControllerConfig ControllerConfig::lpf_sgd(double r) {
    ControllerConfig cfg;
    cfg.kind = OptimizerKind::LpfSgd;
    cfg.r = r;
    cfg.iir = half_band_lowpass();
    return cfg;
}

ControllerConfig ControllerConfig::hpf_sgd(double r) {
    ControllerConfig cfg;
    cfg.kind = OptimizerKind::HpfSgd;
    cfg.r = r;
    cfg.iir = half_band_highpass();
    return cfg;
}

ControllerConfig ControllerConfig::fuzzy_pid(double r, double kp, double ki, double kd) {
    ControllerConfig cfg;
    cfg.kind = OptimizerKind::FuzzyPid;
    cfg.r = r;
    cfg.kp = kp;
    cfg.ki = ki;
    cfg.kd = kd;
    cfg.fuzzy = fuzzy::FuzzyConfig::defaults();
    return cfg;
}

void ControllerConfig::validate() const {
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw InvalidConfigError("r", "must be finite and > 0");
    }
    const bool is_filter = kind == OptimizerKind::LpfSgd || kind == OptimizerKind::HpfSgd;
    if (kind == OptimizerKind::Sgdm || kind == OptimizerKind::Pid) {
        // alpha = 0 is allowed: it is the exact momentum-free reduction.
        if (!(alpha >= 0.0 && alpha <= 1.0)) {
            throw InvalidConfigError("alpha", "must be within [0, 1]");
        }
    }
    if (kind == OptimizerKind::Adam) {
        if (!(beta1 > 0.0 && beta1 < 1.0)) {
            throw InvalidConfigError("beta1", "must be within (0, 1)");
        }
        if (!(beta2 > 0.0 && beta2 < 1.0)) {
            throw InvalidConfigError("beta2", "must be within (0, 1)");
        }
        if (!(eps > 0.0)) {
            throw InvalidConfigError("eps", "must be > 0");
        }
    }
    if (is_filter) {
        if (!iir.has_value()) {
            throw InvalidConfigError("iir", "required for filtered optimizers");
        }
        if (iir->den[0] != 1.0) {
            throw InvalidConfigError("iir.den", "must be normalized with den[0] == 1");
        }
        if (!(iir->gain > 0.0)) {
            throw InvalidConfigError("iir.gain", "must be > 0");
        }
    } else if (iir.has_value()) {
        throw InvalidConfigError("iir", "only valid for filtered optimizers");
    }
    if (kind == OptimizerKind::FuzzyPid) {
        if (!fuzzy.has_value()) {
            throw InvalidConfigError("fuzzy", "required for the fuzzy optimizer");
        }
        fuzzy->validate();
        if (kp < 0.0 || ki < 0.0 || kd < 0.0) {
            throw InvalidConfigError("kp", "fuzzy base gains must be >= 0");
        }
    } else if (fuzzy.has_value()) {
        throw InvalidConfigError("fuzzy", "only valid for the fuzzy optimizer");
    }
}

ControllerState ctrl_init(const ControllerConfig& cfg) {
    cfg.validate();
    ControllerState state;
    if (cfg.kind == OptimizerKind::FuzzyPid) {
        state.gains_hat = {cfg.kp, cfg.ki, cfg.kd};
    }
    return state;
}

namespace {

double iir_step_direct_form(const IIRCoeffs& c, ControllerState& state, double u) {
    const double y = c.gain * (c.num[0] * u + c.num[1] * state.delay_in[0] +
                               c.num[2] * state.delay_in[1]) -
                     c.den[1] * state.delay_out[0] - c.den[2] * state.delay_out[1];
    state.delay_in[1] = state.delay_in[0];
    state.delay_in[0] = u;
    state.delay_out[1] = state.delay_out[0];
    state.delay_out[0] = y;
    return y;
}

double fuzzy_pid_step(const ControllerConfig& cfg, ControllerState& state, double grad) {
    const fuzzy::FuzzyConfig& fz = *cfg.fuzzy;
    fuzzy::FuzzyConfig scaled = fz;
    if (fz.auto_phi) {
        if (state.t < fz.warmup_steps) {
            state.warm_sum += grad;
            state.warm_sumsq += grad * grad;
        } else if (state.phi_effective == 0.0) {
            const double n = static_cast<double>(fz.warmup_steps);
            const double mean = state.warm_sum / n;
            const double var = std::max(state.warm_sumsq / n - mean * mean, 0.0);
            const double sigma = std::sqrt(var);
            state.phi_effective = sigma > 0.0 ? 3.0 * sigma : fz.phi;
        }
        if (state.phi_effective > 0.0) {
            scaled.phi = state.phi_effective;
        }
    }

    const double ec = grad - state.prev_grad;
    state.gains_hat = fuzzy::fuzzy_gains(scaled, {cfg.kp, cfg.ki, cfg.kd}, {grad, ec});
    state.v += grad;  // integral term: running error sum
    return -cfg.r * (state.gains_hat.kp * grad + state.gains_hat.ki * state.v +
                     state.gains_hat.kd * ec);
}

}  // namespace

double ctrl_step(const ControllerConfig& cfg, ControllerState& state, double grad) {
    if (!std::isfinite(grad)) {
        throw NonFiniteGradientError();
    }
    double increment = 0.0;
    switch (cfg.kind) {
        case OptimizerKind::Sgd:
            increment = -cfg.r * grad;
            break;
        case OptimizerKind::Sgdm:
            state.v = cfg.alpha * state.v - cfg.r * grad;
            increment = state.v;
            break;
        case OptimizerKind::Pid:
            state.v = cfg.alpha * state.v - cfg.r * grad;
            state.d = cfg.alpha * state.d + (1.0 - cfg.alpha) * (grad - state.prev_grad);
            increment = state.v + cfg.kd * state.d;
            break;
        case OptimizerKind::Adam: {
            state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
            state.vhat = cfg.beta2 * state.vhat + (1.0 - cfg.beta2) * grad * grad;
            const double step = static_cast<double>(state.t + 1);
            const double m_hat = state.m / (1.0 - std::pow(cfg.beta1, step));
            const double v_hat = state.vhat / (1.0 - std::pow(cfg.beta2, step));
            increment = -cfg.r * m_hat / (std::sqrt(v_hat) + cfg.eps);
            break;
        }
        case OptimizerKind::LpfSgd:
        case OptimizerKind::HpfSgd:
            // The filtered gradient replaces the raw one; each kind carries
            // the coefficients of the band it trains on.
            increment = -cfg.r * iir_step_direct_form(*cfg.iir, state, grad);
            break;
        case OptimizerKind::FuzzyPid:
            increment = fuzzy_pid_step(cfg, state, grad);
            break;
    }
    state.prev_grad = grad;
    ++state.t;
    return increment;
}

double closed_form_iterate(const ControllerConfig& cfg, std::span<const double> grads) {
    cfg.validate();
    if (grads.empty()) {
        throw InvalidConfigError("grads", "need at least one gradient sample");
    }
    const auto n = static_cast<std::ptrdiff_t>(grads.size());
    double total = 0.0;
    switch (cfg.kind) {
        case OptimizerKind::Sgd: {
            double sum = 0.0;
            for (double g : grads) {
                sum += g;
            }
            total = -cfg.r * sum;
            break;
        }
        case OptimizerKind::Sgdm: {
            for (std::ptrdiff_t t = 0; t < n; ++t) {
                double acc = 0.0;
                for (std::ptrdiff_t i = 0; i <= t; ++i) {
                    acc += std::pow(cfg.alpha, static_cast<double>(t - i)) * grads[i];
                }
                total += -cfg.r * acc;
            }
            break;
        }
        case OptimizerKind::Pid: {
            for (std::ptrdiff_t t = 0; t < n; ++t) {
                double momentum = 0.0;
                double derivative = 0.0;
                for (std::ptrdiff_t i = 0; i <= t; ++i) {
                    const double w = std::pow(cfg.alpha, static_cast<double>(t - i));
                    const double prev = (i > 0) ? grads[i - 1] : 0.0;
                    momentum += w * grads[i];
                    derivative += w * (grads[i] - prev);
                }
                total += -cfg.r * momentum + cfg.kd * (1.0 - cfg.alpha) * derivative;
            }
            break;
        }
        case OptimizerKind::Adam: {
            for (std::ptrdiff_t t = 0; t < n; ++t) {
                double m_sum = 0.0;
                double v_sum = 0.0;
                double m_norm = 0.0;
                double v_norm = 0.0;
                for (std::ptrdiff_t i = 0; i <= t; ++i) {
                    m_sum += std::pow(cfg.beta1, static_cast<double>(t - i)) * grads[i];
                    v_sum += std::pow(cfg.beta2, static_cast<double>(t - i)) * grads[i] * grads[i];
                    m_norm += std::pow(cfg.beta1, static_cast<double>(i));
                    v_norm += std::pow(cfg.beta2, static_cast<double>(i));
                }
                total += -cfg.r * (m_sum / m_norm) / (std::sqrt(v_sum / v_norm) + cfg.eps);
            }
            break;
        }
        default:
            throw UnsupportedKindError(std::string("no closed-form iterate for ") +
                                       to_string(cfg.kind));
    }
    return total;
}

double adam_adaptive_gain(const ControllerState& state, const ControllerConfig& cfg) {
    if (cfg.kind != OptimizerKind::Adam) {
        throw NotAdamError();
    }
    if (state.t < 1) {
        throw InvalidConfigError("state.t", "adaptive gain needs at least one completed step");
    }
    const double t = static_cast<double>(state.t);
    const double v_hat = state.vhat / (1.0 - std::pow(cfg.beta2, t));
    const double beta1_norm = (1.0 - std::pow(cfg.beta1, t)) / (1.0 - cfg.beta1);
    return 1.0 / (std::sqrt(v_hat) + cfg.eps) / beta1_norm;
}

std::vector<double> iir_apply(const IIRCoeffs& coeffs, std::span<const double> input) {
    if (coeffs.den[0] != 1.0) {
        throw InvalidConfigError("iir.den", "must be normalized with den[0] == 1");
    }
    const double b0 = coeffs.gain * coeffs.num[0];
    const double b1 = coeffs.gain * coeffs.num[1];
    const double b2 = coeffs.gain * coeffs.num[2];
    const double a1 = coeffs.den[1];
    const double a2 = coeffs.den[2];
    std::vector<double> out(input.size());
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double u = input[i];
        const double y = b0 * u + s1;
        s1 = b1 * u - a1 * y + s2;
        s2 = b2 * u - a2 * y;
        out[i] = y;
    }
    return out;
}

tf::RationalTF controller_tf(const ControllerConfig& cfg) {
    cfg.validate();
    using tf::Polynomial;
    using tf::RationalTF;
    switch (cfg.kind) {
        case OptimizerKind::Sgd:
            return RationalTF::constant(cfg.r);
        case OptimizerKind::Sgdm:
        case OptimizerKind::Pid: {
            if (cfg.alpha == 0.0) {
                // History-free limit: the momentum path vanishes.
                RationalTF base = RationalTF::constant(cfg.r);
                if (cfg.kind == OptimizerKind::Pid) {
                    base = tf_parallel(base, RationalTF(Polynomial{0.0, cfg.kd}, Polynomial{1.0}));
                }
                return base;
            }
            const double log_alpha = std::log(cfg.alpha);
            const RationalTF momentum(Polynomial{cfg.r}, Polynomial{0.0, 1.0} * Polynomial{-log_alpha, 1.0});
            RationalTF out = tf_parallel(RationalTF::constant(cfg.r), momentum);
            if (cfg.kind == OptimizerKind::Pid) {
                out = tf_parallel(out, RationalTF(Polynomial{0.0, cfg.kd}, Polynomial{1.0}));
            }
            return out;
        }
        case OptimizerKind::FuzzyPid:
            // Base gains: kp + ki/s + kd*s, scaled by the learning rate.
            return RationalTF(Polynomial{cfg.ki * cfg.r, cfg.kp * cfg.r, cfg.kd * cfg.r},
                              Polynomial{0.0, 1.0});
        case OptimizerKind::LpfSgd:
        case OptimizerKind::HpfSgd: {
            // Coefficient-sequence reading of the filter as a rational in s,
            // leading tap on the highest power.
            const IIRCoeffs& c = *cfg.iir;
            return RationalTF(
                Polynomial{c.num[2], c.num[1], c.num[0]}.scaled(cfg.r * c.gain),
                Polynomial{c.den[2], c.den[1], c.den[0]});
        }
        case OptimizerKind::Adam:
            throw NoTransferFunctionError("adam has no rational transfer function");
    }
    throw NoTransferFunctionError("unknown optimizer kind");
}

}  // namespace optctl::ctrl

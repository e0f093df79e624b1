#include "optctl/sim.hpp"

#include <algorithm>
#include <cmath>

#include "optctl/errors.hpp"

namespace optctl::sim {

void SimConfig::validate() const {
    if (!(dt > 0.0)) {
        throw InvalidConfigError("sim.dt", "must be > 0");
    }
    if (!(horizon >= dt)) {
        throw InvalidConfigError("sim.horizon", "must be >= dt");
    }
    if (record_every < 1) {
        throw InvalidConfigError("sim.record_every", "must be >= 1");
    }
    if (!(divergence_bound > 0.0)) {
        throw InvalidConfigError("sim.divergence_bound", "must be > 0");
    }
}

const std::vector<double>& Trace::signal(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) {
            return signals[i];
        }
    }
    throw UnknownSignalError("no signal named '" + name + "'");
}

bool Trace::has_signal(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

Trace simulate_loop(plant::LoopGraph& loop, const SimConfig& sim) {
    sim.validate();
    loop.reset(sim.dt);

    Trace trace;
    trace.names = loop.signal_names();
    trace.signals.assign(trace.names.size(), {});

    const auto steps = static_cast<long long>(std::llround(sim.horizon / sim.dt));
    for (long long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * sim.dt;
        const std::vector<double>* values = nullptr;
        try {
            values = &loop.step(t);
        } catch (const NonFiniteStateError&) {
            trace.diverged = true;
            break;
        }
        bool out_of_bounds = false;
        for (double v : *values) {
            if (std::fabs(v) > sim.divergence_bound) {
                out_of_bounds = true;
                break;
            }
        }
        if (k % sim.record_every == 0) {
            trace.times.push_back(t);
            for (std::size_t i = 0; i < values->size(); ++i) {
                trace.signals[i].push_back((*values)[i]);
            }
        }
        if (out_of_bounds) {
            trace.diverged = true;
            break;
        }
    }
    return trace;
}

ResponseMetrics compute_metrics(const Trace& trace, const std::string& signal) {
    const std::vector<double>& x = trace.signal(signal);
    if (x.size() < 10) {
        throw InsufficientDataError("metrics need at least 10 samples, got " +
                                    std::to_string(x.size()));
    }
    const std::size_t n = x.size();

    ResponseMetrics out;
    out.diverged = trace.diverged;

    const std::size_t tail5 = std::max<std::size_t>(1, (n + 19) / 20);
    double final_value = 0.0;
    for (std::size_t i = n - tail5; i < n; ++i) {
        final_value += x[i];
    }
    final_value /= static_cast<double>(tail5);

    // Overshoot: the peak excursion past the final value, i.e. on the side
    // opposite the starting one. A response that never meaningfully crosses
    // its final value (monotone approach) reports the overall peak
    // deviation instead, which is |initial - final| for a step response.
    double overall_max = 0.0;
    double overall_t = trace.times.front();
    for (std::size_t i = 0; i < n; ++i) {
        const double dev = std::fabs(x[i] - final_value);
        if (dev > overall_max) {
            overall_max = dev;
            overall_t = trace.times[i];
        }
    }
    const double start_side = x.front() - final_value;
    double beyond_max = 0.0;
    double beyond_t = trace.times.front();
    for (std::size_t i = 0; i < n; ++i) {
        const double signed_dev = x[i] - final_value;
        if (signed_dev * start_side < 0.0 && std::fabs(signed_dev) > beyond_max) {
            beyond_max = std::fabs(signed_dev);
            beyond_t = trace.times[i];
        }
    }
    if (beyond_max > 1e-6 * overall_max) {
        out.theta_max = beyond_max;
        out.t_max = beyond_t;
    } else {
        out.theta_max = overall_max;
        out.t_max = overall_t;
    }

    // Settling: first instant after which every sample stays inside the band.
    const double band = 0.02 * std::fabs(final_value);
    std::size_t first_settled = n;
    for (std::size_t i = n; i-- > 0;) {
        if (std::fabs(x[i] - final_value) <= band) {
            first_settled = i;
        } else {
            break;
        }
    }
    if (first_settled < n && !trace.diverged) {
        out.settling_time = trace.times[first_settled];
    }

    const std::size_t tail10 = std::max<std::size_t>(1, (n + 9) / 10);
    double sse = 0.0;
    for (std::size_t i = n - tail10; i < n; ++i) {
        sse += std::fabs(x[i] - final_value);
    }
    out.steady_state_error = sse / static_cast<double>(tail10);

    const std::size_t tail50 = std::max<std::size_t>(2, n / 2);
    double st = 0.0, sx = 0.0, stt = 0.0, stx = 0.0;
    const double m = static_cast<double>(tail50);
    for (std::size_t i = n - tail50; i < n; ++i) {
        st += trace.times[i];
        sx += x[i];
        stt += trace.times[i] * trace.times[i];
        stx += trace.times[i] * x[i];
    }
    const double denom = m * stt - st * st;
    out.drift_slope = denom != 0.0 ? (m * stx - st * sx) / denom : 0.0;
    return out;
}

namespace {

tf::StabilityClass classify_with_reference_pole(const tf::PoleZeroSet& closed) {
    // Append the shared step-reference integrator pole once; a simple pole
    // at the origin is exactly what keeps these branches from settling.
    tf::PoleZeroSet merged = closed;
    bool appended = false;
    const double scale = [&] {
        double s = 0.0;
        for (const auto& p : merged.poles) {
            s = std::max(s, std::abs(p));
        }
        return s;
    }();
    const double tol = 1e-9 * (1.0 + scale);
    for (std::size_t i = 0; i < merged.poles.size(); ++i) {
        if (std::abs(merged.poles[i]) <= tol) {
            ++merged.pole_multiplicities[i];
            appended = true;
            break;
        }
    }
    if (!appended) {
        merged.poles.emplace_back(0.0, 0.0);
        merged.pole_multiplicities.push_back(1);
    }
    return classify_stability(merged);
}

}  // namespace

StabilityReport stability_report(const plant::LoopSpec& spec, const SimConfig& sim) {
    spec.validate();
    StabilityReport report;

    const bool adversarial = spec.topology != plant::Topology::Single;
    for (const auto& [name, controller_cfg] : spec.controllers) {
        BranchStability branch;
        branch.name = name;
        try {
            branch.controller = ctrl::controller_tf(controller_cfg);
            branch.has_tf = true;
        } catch (const NoTransferFunctionError& err) {
            branch.no_tf_reason = err.what();
        }
        if (branch.has_tf) {
            const plant::PlantConfig& plant_cfg = spec.plants.at(name);
            const tf::RationalTF plant_tf(tf::Polynomial{1.0},
                                          tf::Polynomial{plant_cfg.pb, plant_cfg.pa, 1.0});
            const tf::RationalTF open = tf::tf_series(branch.controller, plant_tf);
            branch.open_loop_pz = tf::tf_poles_zeros(open);
            branch.open_loop = tf::classify_stability(branch.open_loop_pz);
            const tf::RationalTF closed = tf::tf_feedback(open, tf::RationalTF::constant(1.0));
            branch.closed_loop_pz = tf::tf_poles_zeros(closed);
            branch.closed_loop = tf::classify_stability(branch.closed_loop_pz);
            branch.overall = adversarial ? classify_with_reference_pole(branch.closed_loop_pz)
                                         : branch.closed_loop;
        }
        report.branches.push_back(std::move(branch));
    }

    plant::LoopGraph graph = plant::loop_wire(spec);
    const Trace trace = simulate_loop(graph, sim);
    report.trace_signal_names = trace.names;
    report.trace_diverged = trace.diverged;
    for (const std::string& name : trace.names) {
        report.trace_metrics.push_back(compute_metrics(trace, name));
    }
    return report;
}

}  // namespace optctl::sim

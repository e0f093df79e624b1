#pragma once

#include <optional>
#include <string>
#include <vector>

#include "optctl/plants.hpp"
#include "optctl/rational.hpp"

namespace optctl::sim {

struct SimConfig {
    double dt = 0.01;           // step size, seconds
    double horizon = 50.0;      // total simulated time, seconds
    int record_every = 1;       // decimation of recorded samples
    double divergence_bound = 1e6;

    void validate() const;
};

// Uniformly sampled record of every named loop signal. Spacing between
// recorded instants is dt * record_every.
struct Trace {
    std::vector<double> times;
    std::vector<std::string> names;
    std::vector<std::vector<double>> signals;  // aligned with names
    bool diverged = false;

    const std::vector<double>& signal(const std::string& name) const;
    bool has_signal(const std::string& name) const;
};

struct ResponseMetrics {
    double theta_max = 0.0;  // peak |deviation from the final value|
    double t_max = 0.0;      // time of that peak, seconds
    std::optional<double> settling_time;  // first entry into the +-2% band, or none
    double steady_state_error = 0.0;      // mean |deviation| over the final 10%
    double drift_slope = 0.0;             // least-squares slope over the final 50%
    bool diverged = false;
};

// Runs the wired loop once per dt until the horizon, recording decimated
// samples. Divergence (any |signal| above the bound) stops the run early and
// is reported as data, not as an error.
Trace simulate_loop(plant::LoopGraph& loop, const SimConfig& sim);

// Metrics per the field definitions; the final value is estimated as the
// mean of the last 5% of samples. Needs at least 10 samples.
ResponseMetrics compute_metrics(const Trace& trace, const std::string& signal);

// Rational-analysis entry for one branch. The open loop is the controller in
// series with its plant; the closed loop wraps it in unity feedback. The
// overall verdict additionally counts the shared reference integrator pole
// at s = 0 once for adversarial topologies, which is what keeps those
// branches marginal even when the closed loop is stable.
struct BranchStability {
    std::string name;
    bool has_tf = false;
    std::string no_tf_reason;
    tf::RationalTF controller;
    tf::PoleZeroSet open_loop_pz;
    tf::StabilityClass open_loop;
    tf::PoleZeroSet closed_loop_pz;
    tf::StabilityClass closed_loop;
    tf::StabilityClass overall;
};

struct StabilityReport {
    std::vector<BranchStability> branches;
    // Metrics from a default simulation run of the same spec, one entry per
    // recorded signal, aligned with trace_signal_names.
    std::vector<std::string> trace_signal_names;
    std::vector<ResponseMetrics> trace_metrics;
    bool trace_diverged = false;
};

StabilityReport stability_report(const plant::LoopSpec& spec, const SimConfig& sim = SimConfig{});

}  // namespace optctl::sim

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "optctl/controllers.hpp"

namespace optctl::plant {

// Second-order block 1/(s^2 + pa*s + pb) in controllable canonical form:
// x1 is the output, x2 its rate.
struct PlantConfig {
    double pa = 1.0;
    double pb = 1.0;

    // pb == 0 degenerates into an integrator chain; allowed but worth
    // surfacing to callers that expect a settling output.
    bool integrator_chain() const { return pb == 0.0; }

    void validate() const;
};

struct PlantState {
    double x1 = 0.0;
    double x2 = 0.0;
};

// Exact zero-order-hold discretization x' = Ad*x + Bd*u over one step. The
// matrices come from the closed-form 2x2 exponential via the eigenvalues of
// s^2 + pa*s + pb, with the repeated-root limit handled analytically.
struct DiscretePlant {
    double ad[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
    double bd[2] = {0.0, 0.0};
    double dt = 0.0;
};

DiscretePlant plant_discretize(const PlantConfig& cfg, double dt);

// Advances one interval with the input held at u; returns the new output.
// Throws NonFiniteStateError when the state leaves the finite range.
double plant_step(const DiscretePlant& disc, PlantState& state, double u);

enum class SourceKind { Step, Square, Sine, Cosine, GaussianNoise };

const char* to_string(SourceKind kind);

struct SourceSpec {
    SourceKind kind = SourceKind::Step;
    double amplitude = 1.0;
    double period = 2.0;  // seconds, used by Square/Sine/Cosine
    double offset = 0.0;
    std::uint64_t seed = 0;  // used by GaussianNoise

    void validate(const std::string& port) const;
};

// Deterministic in (spec, t, draw_index); noise draws depend only on
// (seed, draw_index) so traces replay exactly.
double source_sample(const SourceSpec& spec, double t, std::uint64_t draw_index);

enum class Topology { Single, Gan, CycleGan };

const char* to_string(Topology topology);

// Wiring description: which controller and plant sits on each named branch,
// and which source feeds each named port.
//   Single:   branches {G},             ports {reference}
//   Gan:      branches {G, D},          ports {d_reference, g_noise}
//   CycleGan: branches {Ga, Gb, Da, Db}, ports {ga_reference, gb_reference}
struct LoopSpec {
    Topology topology = Topology::Single;
    std::map<std::string, ctrl::ControllerConfig> controllers;
    std::map<std::string, PlantConfig> plants;
    std::map<std::string, SourceSpec> sources;

    // Throws TopologyError naming the missing branch or port.
    void validate() const;
};

// Executable realization of a LoopSpec: owns every controller and plant
// state. Controller blocks respond with positive gain to their input.
// Kinds with a rational transfer function run as its exact zero-order-hold
// discretization, so refining dt only shrinks the input-hold error; the
// adaptive and filtered kinds have no continuous form and run their
// per-sample rules once per step.
class LoopGraph {
  public:
    explicit LoopGraph(LoopSpec spec);

    const LoopSpec& spec() const { return spec_; }
    const std::vector<std::string>& signal_names() const { return signal_names_; }

    // Discretizes the plants for the step size and zeroes all state.
    void reset(double dt);

    // Advances one step at time t; returns one value per signal name.
    // Evaluation order is fixed, so traces are reproducible.
    const std::vector<double>& step(double t);

  private:
    void step_single(double t);
    void step_gan(double t);
    void step_cyclegan(double t);

    LoopSpec spec_;
    std::vector<std::string> signal_names_;
    std::vector<double> signals_;
    double dt_ = 0.0;
    std::uint64_t draw_index_ = 0;

    struct Branch {
        ctrl::ControllerConfig controller;
        // Strictly proper part of the controller transfer function,
        // discretized exactly (momentum/integral path).
        DiscretePlant ctrl_disc;
        PlantState ctrl_state;
        bool has_ctrl_dynamics = false;
        // Per-sample state for the adaptive and filtered kinds.
        ctrl::ControllerState sample_state;
        double integral = 0.0;    // fuzzy PID integral term
        double prev_input = 0.0;  // derivative terms
        // Warm-up statistics for the adaptive fuzzy universe.
        double warm_sum = 0.0;
        double warm_sumsq = 0.0;
        long long samples = 0;
        double phi_effective = 0.0;
        DiscretePlant plant;
        PlantState plant_state;
        double last_output = 0.0;
    };
    std::map<std::string, Branch> branches_;

    double controller_block(Branch& branch, double input);

    // Dedicated plant instances for the cycle cascades; they reuse the
    // opposite generator's dynamics but carry their own state.
    struct Cascade {
        DiscretePlant plant;
        PlantState state;
        double last_output = 0.0;
    };
    std::map<std::string, Cascade> cascades_;
};

LoopGraph loop_wire(const LoopSpec& spec);

}  // namespace optctl::plant

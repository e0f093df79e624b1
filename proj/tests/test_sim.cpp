#include <cmath>
#include <fstream>

#include "doctest.h"
#include "optctl/errors.hpp"
#include "optctl/io.hpp"
#include "optctl/sim.hpp"
#include "support.hpp"

using optctl::ctrl::ControllerConfig;
using optctl::plant::loop_wire;
using optctl::plant::LoopGraph;
using optctl::plant::LoopSpec;
using optctl::plant::PlantConfig;
using optctl::plant::SourceKind;
using optctl::plant::SourceSpec;
using optctl::plant::Topology;
using optctl::sim::compute_metrics;
using optctl::sim::ResponseMetrics;
using optctl::sim::SimConfig;
using optctl::sim::simulate_loop;
using optctl::sim::stability_report;
using optctl::sim::StabilityReport;
using optctl::sim::Trace;
using optctl::tf::StabilityTag;

namespace {

LoopSpec gan_spec(const ControllerConfig& controller) {
    LoopSpec spec;
    spec.topology = Topology::Gan;
    spec.controllers.emplace("G", controller);
    spec.controllers.emplace("D", controller);
    spec.plants.emplace("G", PlantConfig{});
    spec.plants.emplace("D", PlantConfig{});
    SourceSpec reference;
    reference.kind = SourceKind::Square;
    reference.amplitude = 1.0;
    reference.period = 2.0;
    SourceSpec noise;
    noise.kind = SourceKind::GaussianNoise;
    noise.amplitude = 1.0;
    noise.seed = 42;
    spec.sources.emplace("d_reference", reference);
    spec.sources.emplace("g_noise", noise);
    return spec;
}

LoopSpec single_pid_spec() {
    LoopSpec spec;
    spec.topology = Topology::Single;
    spec.controllers.emplace("G", ControllerConfig::pid(0.5, 0.9, 0.1));
    spec.plants.emplace("G", PlantConfig{1.0, 1.0});
    SourceSpec step;
    step.kind = SourceKind::Step;
    spec.sources.emplace("reference", step);
    return spec;
}

Trace synthetic_trace(double dt, double horizon, double (*f)(double)) {
    Trace trace;
    trace.names = {"y"};
    trace.signals.resize(1);
    for (double t = 0.0; t < horizon; t += dt) {
        trace.times.push_back(t);
        trace.signals[0].push_back(f(t));
    }
    return trace;
}

}  // namespace

TEST_CASE("zero-excitation adversarial loop records an all-zero trace") {
    LoopSpec spec = gan_spec(ControllerConfig::sgd(0.01));
    spec.sources.at("d_reference").amplitude = 0.0;
    spec.sources.at("g_noise").amplitude = 0.0;
    LoopGraph graph = loop_wire(spec);
    const Trace trace = simulate_loop(graph, SimConfig{0.01, 10.0, 1, 1e6});
    CHECK_FALSE(trace.diverged);
    for (const auto& signal : trace.signals) {
        for (double v : signal) {
            CHECK(v == 0.0);
        }
    }
}

TEST_CASE("metrics of a monotone saturating response") {
    const Trace trace = synthetic_trace(0.01, 30.0, [](double t) { return 1.0 - std::exp(-t); });
    const ResponseMetrics m = compute_metrics(trace, "y");
    // No excursion past the final value: the peak deviation is the rise.
    CHECK(m.theta_max == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(m.t_max == doctest::Approx(0.0));
    REQUIRE(m.settling_time.has_value());
    // Exponential decay enters the 2% band around -ln(0.02) ~ 3.9 s.
    CHECK(*m.settling_time == doctest::Approx(3.9).epsilon(0.05));
    CHECK(m.theta_max >= m.steady_state_error);
}

TEST_CASE("metrics locate the first overshoot peak of a damped oscillation") {
    const Trace trace =
        synthetic_trace(0.01, 40.0, [](double t) { return 1.0 - std::exp(-t) * std::cos(t); });
    const ResponseMetrics m = compute_metrics(trace, "y");
    // The deviation beyond the final value peaks where the derivative
    // vanishes: tan t = -1, first at 3*pi/4.
    const double expected_t = 3.0 * 3.14159265358979323846 / 4.0;
    const double expected_peak = std::exp(-expected_t) * std::cos(3.14159265358979323846 / 4.0);
    CHECK(std::fabs(m.t_max - expected_t) <= 0.01 + 1e-12);
    CHECK(m.theta_max == doctest::Approx(expected_peak).epsilon(1e-2));
    CHECK(m.settling_time.has_value());
    CHECK(*m.settling_time >= m.t_max);
}

TEST_CASE("underdamped closed response reproduces the damping-ratio overshoot") {
    for (double zeta : {0.2, 0.5, 0.7}) {
        LoopSpec spec;
        spec.topology = Topology::Single;
        spec.controllers.emplace("G", ControllerConfig::sgd(1e-9));
        spec.plants.emplace("G", PlantConfig{2.0 * zeta, 1.0});
        SourceSpec step;
        step.kind = SourceKind::Step;
        spec.sources.emplace("reference", step);
        // A vanishing loop gain leaves the bare block driven by the step.
        LoopGraph graph = loop_wire(spec);
        Trace trace = simulate_loop(graph, SimConfig{0.01, 60.0, 1, 1e6});
        // Scale back up: the recorded output is r * response; deviations are
        // relative so the ratio test below is scale-free.
        const ResponseMetrics m = compute_metrics(trace, "y_G");
        const double final_value = 1e-9;  // static gain r / pb
        const double overshoot = m.theta_max / final_value;
        const double expected =
            std::exp(-zeta * 3.14159265358979323846 / std::sqrt(1.0 - zeta * zeta));
        CHECK(overshoot == doctest::Approx(expected).epsilon(0.02));
    }
}

TEST_CASE("unknown signals and short traces are rejected") {
    const Trace trace = synthetic_trace(0.01, 30.0, [](double t) { return t; });
    CHECK_THROWS_AS(compute_metrics(trace, "nope"), optctl::UnknownSignalError);
    const Trace tiny = synthetic_trace(1.0, 5.0, [](double t) { return t; });
    CHECK_THROWS_AS(compute_metrics(tiny, "y"), optctl::InsufficientDataError);
}

TEST_CASE("the square-driven loop with a plain-descent pair never settles") {
    LoopSpec spec = gan_spec(ControllerConfig::sgd(0.01));
    LoopGraph graph = loop_wire(spec);
    const Trace trace = simulate_loop(graph, SimConfig{0.01, 50.0, 1, 1e6});
    CHECK_FALSE(trace.diverged);
    const ResponseMetrics m = compute_metrics(trace, "e");
    CHECK_FALSE(m.settling_time.has_value());
}

TEST_CASE("identical configuration replays bit-identical traces") {
    const LoopSpec spec = gan_spec(ControllerConfig::adam());
    LoopGraph a = loop_wire(spec);
    LoopGraph b = loop_wire(spec);
    const SimConfig sim{0.01, 20.0, 1, 1e6};
    const Trace ta = simulate_loop(a, sim);
    const Trace tb = simulate_loop(b, sim);
    REQUIRE(ta.times.size() == tb.times.size());
    for (std::size_t i = 0; i < ta.signals.size(); ++i) {
        for (std::size_t k = 0; k < ta.signals[i].size(); ++k) {
            CHECK(ta.signals[i][k] == tb.signals[i][k]);
        }
    }
}

TEST_CASE("decimation keeps spacing uniform") {
    LoopSpec spec = single_pid_spec();
    LoopGraph graph = loop_wire(spec);
    const Trace trace = simulate_loop(graph, SimConfig{0.01, 10.0, 5, 1e6});
    REQUIRE(trace.times.size() > 2);
    const double spacing = trace.times[1] - trace.times[0];
    CHECK(spacing == doctest::Approx(0.05));
    for (std::size_t i = 2; i < trace.times.size(); ++i) {
        CHECK(trace.times[i] - trace.times[i - 1] == doctest::Approx(spacing));
    }
}

TEST_CASE("metrics at halved step sizes agree for the settling loop") {
    LoopSpec spec = single_pid_spec();
    LoopGraph graph = loop_wire(spec);
    const Trace full = simulate_loop(graph, SimConfig{0.01, 50.0, 1, 1e6});
    const Trace half = simulate_loop(graph, SimConfig{0.005, 50.0, 1, 1e6});
    const ResponseMetrics mf = compute_metrics(full, "y_G");
    const ResponseMetrics mh = compute_metrics(half, "y_G");
    CHECK(std::fabs(mf.theta_max - mh.theta_max) / std::fabs(mh.theta_max) < 0.01);
    CHECK(std::fabs(mf.t_max - mh.t_max) < 2.0 * 0.01);
}

TEST_CASE("divergence is reported as data") {
    // An unstable block (right-half-plane poles) under a step must trip the
    // divergence bound rather than throw.
    LoopSpec spec;
    spec.topology = Topology::Single;
    spec.controllers.emplace("G", ControllerConfig::sgd(1.0));
    spec.plants.emplace("G", PlantConfig{-1.0, -1.0});
    SourceSpec step;
    step.kind = SourceKind::Step;
    spec.sources.emplace("reference", step);
    LoopGraph graph = loop_wire(spec);
    const Trace trace = simulate_loop(graph, SimConfig{0.01, 100.0, 1, 1e6});
    CHECK(trace.diverged);
    const ResponseMetrics m = compute_metrics(trace, "y_G");
    CHECK(m.diverged);
    CHECK_FALSE(m.settling_time.has_value());
}

TEST_CASE("branch analysis of the single loop") {
    LoopSpec spec;
    spec.topology = Topology::Single;
    spec.controllers.emplace("G", ControllerConfig::sgd(0.5));
    spec.plants.emplace("G", PlantConfig{1.0, 0.0});  // 1/(s(s+1))
    SourceSpec step;
    step.kind = SourceKind::Step;
    spec.sources.emplace("reference", step);

    const StabilityReport report = stability_report(spec, SimConfig{0.01, 20.0, 1, 1e6});
    REQUIRE(report.branches.size() == 1);
    const auto& branch = report.branches[0];
    CHECK(branch.has_tf);
    // Open loop carries the plant's origin pole; closing the loop moves it.
    CHECK(branch.open_loop.tag == StabilityTag::MarginallyStable);
    CHECK(branch.closed_loop.tag == StabilityTag::Stable);
    CHECK(branch.overall.tag == StabilityTag::Stable);
}

TEST_CASE("branch analysis of the adversarial loop") {
    LoopSpec spec = gan_spec(ControllerConfig::sgdm(0.01, 0.9));
    spec.controllers.at("D") = ControllerConfig::adam();
    const StabilityReport report = stability_report(spec, SimConfig{0.01, 20.0, 1, 1e6});
    REQUIRE(report.branches.size() == 2);

    const auto& adam_branch = report.branches[0];  // "D" sorts first
    CHECK_FALSE(adam_branch.has_tf);
    CHECK_FALSE(adam_branch.no_tf_reason.empty());

    const auto& momentum_branch = report.branches[1];
    CHECK(momentum_branch.has_tf);
    // The momentum controller contributes a simple origin pole open loop.
    CHECK(momentum_branch.open_loop.tag == StabilityTag::MarginallyStable);
    REQUIRE(momentum_branch.open_loop.witness.has_value());
    CHECK(std::abs(*momentum_branch.open_loop.witness) < 1e-12);
    bool found_momentum_pole = false;
    for (const auto& p : momentum_branch.open_loop_pz.poles) {
        if (std::fabs(p.real() - std::log(0.9)) < 1e-9 && std::fabs(p.imag()) < 1e-9) {
            found_momentum_pole = true;
        }
    }
    CHECK(found_momentum_pole);
    // The shared step-reference integrator keeps the branch marginal overall.
    CHECK(momentum_branch.overall.tag == StabilityTag::MarginallyStable);
    REQUIRE(momentum_branch.overall.witness.has_value());
    CHECK(std::abs(*momentum_branch.overall.witness) < 1e-12);

    // Simulation metrics ride along for every recorded signal.
    CHECK(report.trace_signal_names.size() == report.trace_metrics.size());
    CHECK(report.trace_signal_names.size() == 5);
}

TEST_CASE("golden settling run stays bit-identical") {
    const std::string dir = OPTCTL_FIXTURE_DIR;
    const std::string expected = optctl::io::read_file(dir + "/v1/pid_single_trace.csv");
    LoopSpec spec = single_pid_spec();
    LoopGraph graph = loop_wire(spec);
    const Trace trace = simulate_loop(graph, SimConfig{0.01, 50.0, 1, 1e6});
    CHECK(optctl::io::trace_to_csv(trace) == expected);
    REQUIRE(compute_metrics(trace, "y_G").settling_time.has_value());
}

#pragma once

#include <string>
#include <vector>

#include "optctl/plants.hpp"
#include "optctl/sim.hpp"
#include "optctl/toytrain.hpp"

#include "json.hpp"

namespace optctl::io {

// Shortest round-trippable decimal form (17 significant digits).
std::string format_double(double value);

// Trace CSV: header `t,<signal>...`, one row per recorded instant.
std::string trace_to_csv(const sim::Trace& trace);

// Inverse of trace_to_csv; values round-trip bit-exactly.
sim::Trace trace_from_csv(const std::string& csv);

// Train report CSV: one row per epoch.
std::string report_to_csv(const toy::TrainReport& report);

// Minimal line chart (axes + polyline), no external charting dependency.
std::string line_chart_svg(const std::vector<double>& x, const std::vector<double>& y,
                           const std::string& title);

nlohmann::json metrics_to_json(const sim::Trace& trace);
nlohmann::json stability_report_to_json(const sim::StabilityReport& report);
nlohmann::json report_to_json(const toy::TrainReport& report);

// Config ingestion. Every parser throws InvalidConfigError naming the field
// on validation problems; JSON syntax errors propagate as
// nlohmann::json::parse_error with the byte offset.
ctrl::ControllerConfig parse_controller(const nlohmann::json& j, const std::string& where);
plant::LoopSpec parse_loop(const nlohmann::json& j);
sim::SimConfig parse_sim(const nlohmann::json& j);

struct TrainSetup {
    enum class Mode { Gan, CycleGan };
    Mode mode = Mode::Gan;
    toy::TrainConfig config;
    toy::Dataset1D dataset;
    int dataset_n = 2048;
    toy::MLPSpec generator;
    toy::MLPSpec discriminator;
    toy::CycleSpecs cycle_specs;
};

TrainSetup parse_train(const nlohmann::json& j);

// Top-level config document: requires a supported "schema" version.
void check_schema(const nlohmann::json& j);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace optctl::io

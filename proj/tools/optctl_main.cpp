#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "optctl/errors.hpp"
#include "optctl/io.hpp"
#include "optctl/sim.hpp"
#include "optctl/toytrain.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDiverged = 3;

std::string default_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) {
        return flag_value;
    }
    if (const char* env = std::getenv("OPTCTL_OUT")) {
        return env;
    }
    return "out";
}

json load_config(const std::string& path) {
    const std::string text = optctl::io::read_file(path);
    return json::parse(text);  // parse_error carries the byte offset
}

struct SimulateResult {
    optctl::sim::Trace trace;
    std::string trace_csv;
    json metrics;
};

SimulateResult run_simulate(const json& doc) {
    optctl::io::check_schema(doc);
    if (!doc.contains("loop")) {
        throw optctl::InvalidConfigError("loop", "missing loop section");
    }
    const optctl::plant::LoopSpec spec = optctl::io::parse_loop(doc["loop"]);
    const optctl::sim::SimConfig sim_cfg =
        doc.contains("sim") ? optctl::io::parse_sim(doc["sim"]) : optctl::sim::SimConfig{};
    optctl::plant::LoopGraph graph = optctl::plant::loop_wire(spec);
    SimulateResult result;
    result.trace = optctl::sim::simulate_loop(graph, sim_cfg);
    result.trace_csv = optctl::io::trace_to_csv(result.trace);
    result.metrics = optctl::io::metrics_to_json(result.trace);
    return result;
}

struct TrainResult {
    optctl::toy::TrainReport report;
    std::string report_csv;
    json report_json;
};

TrainResult run_train(const json& doc) {
    optctl::io::check_schema(doc);
    if (!doc.contains("train")) {
        throw optctl::InvalidConfigError("train", "missing train section");
    }
    const optctl::io::TrainSetup setup = optctl::io::parse_train(doc["train"]);
    const optctl::toy::Samples samples =
        optctl::toy::make_dataset(setup.dataset, setup.dataset_n, setup.config.seed);
    TrainResult result;
    if (setup.mode == optctl::io::TrainSetup::Mode::Gan) {
        result.report = optctl::toy::train_gan_toy(samples.a, setup.generator,
                                                   setup.discriminator, setup.config);
    } else {
        result.report =
            optctl::toy::train_cyclegan_toy(samples, setup.cycle_specs, setup.config);
    }
    result.report_csv = optctl::io::report_to_csv(result.report);
    result.report_json = optctl::io::report_to_json(result.report);
    return result;
}

int cmd_analyze(const std::string& config_path, const std::string& out_flag) {
    const json doc = load_config(config_path);
    optctl::io::check_schema(doc);
    if (!doc.contains("loop")) {
        throw optctl::InvalidConfigError("loop", "missing loop section");
    }
    const optctl::plant::LoopSpec spec = optctl::io::parse_loop(doc["loop"]);
    const optctl::sim::SimConfig sim_cfg =
        doc.contains("sim") ? optctl::io::parse_sim(doc["sim"]) : optctl::sim::SimConfig{};
    const optctl::sim::StabilityReport report = optctl::sim::stability_report(spec, sim_cfg);

    std::cout << "branch      open loop            closed loop          overall\n";
    for (const auto& b : report.branches) {
        std::ostringstream row;
        row << b.name;
        row << std::string(b.name.size() < 12 ? 12 - b.name.size() : 1, ' ');
        if (b.has_tf) {
            const auto cell = [](const optctl::tf::StabilityClass& c) {
                std::string s = optctl::tf::to_string(c.tag);
                if (c.witness.has_value()) {
                    s += " @ " + optctl::io::format_double(c.witness->real());
                }
                s.resize(21, ' ');
                return s;
            };
            row << cell(b.open_loop) << cell(b.closed_loop)
                << optctl::tf::to_string(b.overall.tag);
            if (b.overall.witness.has_value()) {
                row << " (pole " << optctl::io::format_double(b.overall.witness->real());
                if (b.overall.witness->imag() != 0.0) {
                    row << (b.overall.witness->imag() > 0 ? "+" : "")
                        << optctl::io::format_double(b.overall.witness->imag()) << "i";
                }
                row << ")";
            }
        } else {
            row << "no transfer function: " << b.no_tf_reason;
        }
        std::cout << row.str() << "\n";
    }

    const fs::path out_dir = default_out_dir(out_flag);
    fs::create_directories(out_dir);
    optctl::io::write_file((out_dir / "stability.json").string(),
                           optctl::io::stability_report_to_json(report).dump(2) + "\n");
    std::cout << "report: " << (out_dir / "stability.json").string() << "\n";
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_flag, bool plot) {
    const json doc = load_config(config_path);
    const SimulateResult result = run_simulate(doc);

    const fs::path out_dir = default_out_dir(out_flag);
    fs::create_directories(out_dir);
    optctl::io::write_file((out_dir / "trace.csv").string(), result.trace_csv);
    optctl::io::write_file((out_dir / "metrics.json").string(), result.metrics.dump(2) + "\n");
    if (plot) {
        for (std::size_t i = 0; i < result.trace.names.size(); ++i) {
            const std::string name = result.trace.names[i];
            optctl::io::write_file(
                (out_dir / (name + ".svg")).string(),
                optctl::io::line_chart_svg(result.trace.times, result.trace.signals[i], name));
        }
    }
    std::cout << "trace: " << (out_dir / "trace.csv").string() << "\n";
    std::cout << "metrics: " << (out_dir / "metrics.json").string() << "\n";
    return result.trace.diverged ? kExitDiverged : kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& out_flag,
              const std::string& trace_path, const std::string& trace_signal, bool plot) {
    const json doc = load_config(config_path);
    const TrainResult result = run_train(doc);

    const fs::path out_dir = default_out_dir(out_flag);
    fs::create_directories(out_dir);
    optctl::io::write_file((out_dir / "report.csv").string(), result.report_csv);
    optctl::io::write_file((out_dir / "report.json").string(), result.report_json.dump(2) + "\n");
    if (plot) {
        std::vector<double> epochs(result.report.theta_norm.size());
        for (std::size_t i = 0; i < epochs.size(); ++i) {
            epochs[i] = static_cast<double>(i);
        }
        optctl::io::write_file((out_dir / "loss.svg").string(),
                               optctl::io::line_chart_svg(epochs, result.report.gen_loss,
                                                          "generator loss"));
        optctl::io::write_file((out_dir / "theta_norm.svg").string(),
                               optctl::io::line_chart_svg(epochs, result.report.theta_norm,
                                                          "weight norm"));
    }
    if (!trace_path.empty()) {
        const optctl::sim::Trace trace =
            optctl::io::trace_from_csv(optctl::io::read_file(trace_path));
        const double score =
            optctl::toy::consistency_score(result.report, trace, trace_signal);
        std::cout << "consistency_score(" << trace_signal
                  << ") = " << optctl::io::format_double(score) << "\n";
    }
    std::cout << "report: " << (out_dir / "report.csv").string() << "\n";
    return result.report.diverged ? kExitDiverged : kExitOk;
}

struct SweepCell {
    json doc;
    std::vector<double> axis_values;
};

int cmd_sweep(const std::string& config_path, const std::string& out_flag) {
    const json doc = load_config(config_path);
    optctl::io::check_schema(doc);
    const std::string command = doc.value("command", "simulate");
    if (command != "simulate" && command != "train") {
        throw optctl::InvalidConfigError("command", "must be 'simulate' or 'train'");
    }
    if (!doc.contains("base") || !doc["base"].is_object()) {
        throw optctl::InvalidConfigError("base", "missing base config");
    }
    if (!doc.contains("axes") || !doc["axes"].is_array() || doc["axes"].empty()) {
        throw optctl::InvalidConfigError("axes", "need a nonempty axis list");
    }
    const std::size_t cap = doc.value("cap", std::size_t{10000});
    const int parallelism = doc.value("parallelism", 1);
    if (parallelism < 1) {
        throw optctl::InvalidConfigError("parallelism", "must be >= 1");
    }

    struct Axis {
        std::string path;
        std::vector<double> values;
    };
    std::vector<Axis> axes;
    std::size_t grid = 1;
    for (const auto& a : doc["axes"]) {
        if (!a.contains("path") || !a.contains("values") || !a["values"].is_array() ||
            a["values"].empty()) {
            throw optctl::InvalidConfigError("axes", "each axis needs a path and values");
        }
        axes.push_back({a["path"].get<std::string>(), a["values"].get<std::vector<double>>()});
        grid *= axes.back().values.size();
    }
    if (grid > cap) {
        throw optctl::InvalidConfigError("axes", "grid size " + std::to_string(grid) +
                                                     " exceeds cap " + std::to_string(cap));
    }

    // Materialize every cell up front; workers only index into the list.
    std::vector<SweepCell> cells(grid);
    for (std::size_t cell = 0; cell < grid; ++cell) {
        json cell_doc = doc["base"];
        std::size_t rest = cell;
        std::vector<double> values(axes.size());
        for (std::size_t a = axes.size(); a-- > 0;) {
            const std::size_t idx = rest % axes[a].values.size();
            rest /= axes[a].values.size();
            values[a] = axes[a].values[idx];
            cell_doc[json::json_pointer(axes[a].path)] = values[a];
        }
        cells[cell] = SweepCell{std::move(cell_doc), std::move(values)};
    }

    const fs::path out_dir = default_out_dir(out_flag);
    fs::create_directories(out_dir);

    struct CellResult {
        bool diverged = false;
        std::string error;
        std::vector<std::string> metric_names;
        std::vector<double> metric_values;
    };
    std::vector<CellResult> results(grid);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= grid) {
                return;
            }
            CellResult& res = results[i];
            char cell_name[32];
            std::snprintf(cell_name, sizeof(cell_name), "cell_%04zu", i);
            const fs::path cell_dir = out_dir / cell_name;
            fs::create_directories(cell_dir);
            try {
                if (command == "simulate") {
                    const SimulateResult sim_result = run_simulate(cells[i].doc);
                    optctl::io::write_file((cell_dir / "trace.csv").string(),
                                           sim_result.trace_csv);
                    optctl::io::write_file((cell_dir / "metrics.json").string(),
                                           sim_result.metrics.dump(2) + "\n");
                    res.diverged = sim_result.trace.diverged;
                    for (const std::string& name : sim_result.trace.names) {
                        const auto metrics = optctl::sim::compute_metrics(sim_result.trace, name);
                        res.metric_names.push_back(name + "_theta_max");
                        res.metric_values.push_back(metrics.theta_max);
                        res.metric_names.push_back(name + "_sse");
                        res.metric_values.push_back(metrics.steady_state_error);
                    }
                } else {
                    const TrainResult train_result = run_train(cells[i].doc);
                    optctl::io::write_file((cell_dir / "report.csv").string(),
                                           train_result.report_csv);
                    optctl::io::write_file((cell_dir / "report.json").string(),
                                           train_result.report_json.dump(2) + "\n");
                    res.diverged = train_result.report.diverged;
                    const auto& report = train_result.report;
                    const auto last = [](const std::vector<double>& v) {
                        return v.empty() ? 0.0 : v.back();
                    };
                    res.metric_names = {"theta_norm", "mean_error", "std_error"};
                    res.metric_values = {last(report.theta_norm), last(report.mean_error),
                                         last(report.std_error)};
                    if (!report.cycle_error.empty()) {
                        res.metric_names.push_back("cycle_error");
                        res.metric_values.push_back(report.cycle_error.back());
                    }
                }
            } catch (const std::exception& err) {
                res.error = err.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < parallelism; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (std::thread& th : pool) {
        th.join();
    }

    // Summary in grid order, independent of worker scheduling.
    std::ostringstream summary;
    summary << "cell";
    for (const Axis& a : axes) {
        summary << ',' << a.path;
    }
    summary << ",diverged";
    if (!results.empty() && results[0].error.empty()) {
        for (const std::string& name : results[0].metric_names) {
            summary << ',' << name;
        }
    }
    summary << '\n';
    for (std::size_t i = 0; i < grid; ++i) {
        summary << i;
        for (double v : cells[i].axis_values) {
            summary << ',' << optctl::io::format_double(v);
        }
        if (!results[i].error.empty()) {
            summary << ",error\n";
            continue;
        }
        summary << ',' << (results[i].diverged ? 1 : 0);
        for (double v : results[i].metric_values) {
            summary << ',' << optctl::io::format_double(v);
        }
        summary << '\n';
    }
    optctl::io::write_file((out_dir / "summary.csv").string(), summary.str());
    std::cout << "summary: " << (out_dir / "summary.csv").string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimizer loop analysis, simulation and toy training"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string trace_path;
    std::string trace_signal = "y_G";
    bool plot = false;

    CLI::App* analyze = app.add_subcommand("analyze", "Transfer-function stability report");
    analyze->add_option("config", config_path, "JSON config file")->required();
    analyze->add_option("--out", out_dir, "output directory");

    CLI::App* simulate = app.add_subcommand("simulate", "Time-domain loop simulation");
    simulate->add_option("config", config_path, "JSON config file")->required();
    simulate->add_option("--out", out_dir, "output directory");
    simulate->add_flag("--plot", plot, "emit SVG charts");

    CLI::App* train = app.add_subcommand("train", "Toy adversarial training");
    train->add_option("config", config_path, "JSON config file")->required();
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--trace", trace_path, "companion trace CSV for the consistency score");
    train->add_option("--trace-signal", trace_signal, "trace signal for the consistency score");
    train->add_flag("--plot", plot, "emit SVG charts");

    CLI::App* sweep = app.add_subcommand("sweep", "Grid sweep of simulate/train runs");
    sweep->add_option("config", config_path, "JSON sweep config file")->required();
    sweep->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) {
            return cmd_analyze(config_path, out_dir);
        }
        if (simulate->parsed()) {
            return cmd_simulate(config_path, out_dir, plot);
        }
        if (train->parsed()) {
            return cmd_train(config_path, out_dir, trace_path, trace_signal, plot);
        }
        if (sweep->parsed()) {
            return cmd_sweep(config_path, out_dir);
        }
    } catch (const json::parse_error& err) {
        // err.byte is the offset of the failure in the input.
        std::cerr << "config error at byte " << err.byte << ": " << err.what() << "\n";
        return kExitConfigError;
    } catch (const optctl::InvalidConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitConfigError;
    } catch (const optctl::Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitConfigError;
    }
    return kExitOk;
}

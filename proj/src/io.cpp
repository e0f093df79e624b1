#include "optctl/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "optctl/errors.hpp"

namespace optctl::io {

using nlohmann::json;

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string trace_to_csv(const sim::Trace& trace) {
    std::ostringstream out;
    out << "t";
    for (const std::string& name : trace.names) {
        out << ',' << name;
    }
    out << '\n';
    for (std::size_t row = 0; row < trace.times.size(); ++row) {
        out << format_double(trace.times[row]);
        for (const auto& signal : trace.signals) {
            out << ',' << format_double(signal[row]);
        }
        out << '\n';
    }
    return out.str();
}

sim::Trace trace_from_csv(const std::string& csv) {
    sim::Trace trace;
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) {
        throw Error("empty trace CSV");
    }
    std::stringstream header(line);
    std::string cell;
    bool first = true;
    while (std::getline(header, cell, ',')) {
        if (first) {
            if (cell != "t") {
                throw Error("trace CSV must start with a 't' column");
            }
            first = false;
        } else {
            trace.names.push_back(cell);
        }
    }
    trace.signals.assign(trace.names.size(), {});
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream row(line);
        std::size_t column = 0;
        while (std::getline(row, cell, ',')) {
            const double value = std::strtod(cell.c_str(), nullptr);
            if (column == 0) {
                trace.times.push_back(value);
            } else if (column - 1 < trace.signals.size()) {
                trace.signals[column - 1].push_back(value);
            }
            ++column;
        }
    }
    return trace;
}

std::string report_to_csv(const toy::TrainReport& report) {
    std::ostringstream out;
    const bool cyclic = !report.cycle_error.empty();
    out << "epoch,gen_loss,disc_loss,theta_norm,mean_error,std_error";
    if (cyclic) {
        out << ",cycle_error";
    }
    out << '\n';
    for (std::size_t e = 0; e < report.theta_norm.size(); ++e) {
        out << e << ',' << format_double(report.gen_loss[e]) << ','
            << format_double(report.disc_loss[e]) << ',' << format_double(report.theta_norm[e])
            << ',' << format_double(report.mean_error[e]) << ','
            << format_double(report.std_error[e]);
        if (cyclic) {
            out << ',' << format_double(report.cycle_error[e]);
        }
        out << '\n';
    }
    return out.str();
}

std::string line_chart_svg(const std::vector<double>& x, const std::vector<double>& y,
                           const std::string& title) {
    const int width = 640;
    const int height = 360;
    const int margin = 44;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
        << title << "</text>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    if (!x.empty() && x.size() == y.size()) {
        double x_min = x.front(), x_max = x.front(), y_min = y.front(), y_max = y.front();
        for (std::size_t i = 0; i < x.size(); ++i) {
            x_min = std::min(x_min, x[i]);
            x_max = std::max(x_max, x[i]);
            y_min = std::min(y_min, y[i]);
            y_max = std::max(y_max, y[i]);
        }
        if (x_max == x_min) {
            x_max = x_min + 1.0;
        }
        if (y_max == y_min) {
            y_max = y_min + 1.0;
        }
        out << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double px =
                margin + (x[i] - x_min) / (x_max - x_min) * (width - 2.0 * margin);
            const double py =
                height - margin - (y[i] - y_min) / (y_max - y_min) * (height - 2.0 * margin);
            out << px << ',' << py << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << margin << "\" y=\"" << height - margin + 16
            << "\" font-size=\"10\">" << format_double(x_min) << "</text>\n";
        out << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 16
            << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(x_max) << "</text>\n";
        out << "<text x=\"" << margin - 4 << "\" y=\"" << height - margin
            << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(y_min) << "</text>\n";
        out << "<text x=\"" << margin - 4 << "\" y=\"" << margin
            << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(y_max) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

namespace {

json metrics_entry(const sim::ResponseMetrics& m) {
    json j;
    j["theta_max"] = m.theta_max;
    j["t_max"] = m.t_max;
    if (m.settling_time.has_value()) {
        j["settling_time"] = *m.settling_time;
    } else {
        j["settling_time"] = nullptr;
    }
    j["steady_state_error"] = m.steady_state_error;
    j["drift_slope"] = m.drift_slope;
    j["diverged"] = m.diverged;
    return j;
}

json complex_to_json(const tf::Complex& z) { return json::array({z.real(), z.imag()}); }

json stability_entry(const tf::StabilityClass& cls) {
    json j;
    j["class"] = tf::to_string(cls.tag);
    if (cls.witness.has_value()) {
        j["witness"] = complex_to_json(*cls.witness);
    } else {
        j["witness"] = nullptr;
    }
    return j;
}

json pz_entry(const tf::PoleZeroSet& pz) {
    json j;
    j["poles"] = json::array();
    for (std::size_t i = 0; i < pz.poles.size(); ++i) {
        json p;
        p["value"] = complex_to_json(pz.poles[i]);
        p["multiplicity"] = pz.pole_multiplicities[i];
        j["poles"].push_back(p);
    }
    j["zeros"] = json::array();
    for (const auto& z : pz.zeros) {
        j["zeros"].push_back(complex_to_json(z));
    }
    return j;
}

}  // namespace

json metrics_to_json(const sim::Trace& trace) {
    json j;
    j["diverged"] = trace.diverged;
    j["signals"] = json::object();
    for (const std::string& name : trace.names) {
        j["signals"][name] = metrics_entry(sim::compute_metrics(trace, name));
    }
    return j;
}

json stability_report_to_json(const sim::StabilityReport& report) {
    json j;
    j["branches"] = json::array();
    for (const auto& b : report.branches) {
        json entry;
        entry["name"] = b.name;
        if (b.has_tf) {
            entry["controller_tf"] = {{"num", b.controller.num().coeffs()},
                                      {"den", b.controller.den().coeffs()}};
            entry["open_loop"] = pz_entry(b.open_loop_pz);
            entry["open_loop"].update(stability_entry(b.open_loop));
            entry["closed_loop"] = pz_entry(b.closed_loop_pz);
            entry["closed_loop"].update(stability_entry(b.closed_loop));
            entry["overall"] = stability_entry(b.overall);
        } else {
            entry["error"] = b.no_tf_reason;
        }
        j["branches"].push_back(entry);
    }
    j["simulation"] = json::object();
    j["simulation"]["diverged"] = report.trace_diverged;
    for (std::size_t i = 0; i < report.trace_signal_names.size(); ++i) {
        j["simulation"][report.trace_signal_names[i]] = metrics_entry(report.trace_metrics[i]);
    }
    return j;
}

json report_to_json(const toy::TrainReport& report) {
    json j;
    j["gen_loss"] = report.gen_loss;
    j["disc_loss"] = report.disc_loss;
    j["theta_norm"] = report.theta_norm;
    j["mean_error"] = report.mean_error;
    j["std_error"] = report.std_error;
    if (!report.cycle_error.empty()) {
        j["cycle_error"] = report.cycle_error;
    }
    j["diverged"] = report.diverged;
    return j;
}

namespace {

double require_number(const json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw InvalidConfigError(where + "." + key, "missing or not a number");
    }
    return j[key].get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    return j[key].get<double>();
}

}  // namespace

ctrl::ControllerConfig parse_controller(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
        throw InvalidConfigError(where + ".kind", "missing optimizer kind");
    }
    const std::string kind_name = j["kind"].get<std::string>();
    const auto kind = ctrl::kind_from_string(kind_name);
    if (!kind.has_value()) {
        throw InvalidConfigError(where + ".kind", "unknown optimizer kind '" + kind_name + "'");
    }
    ctrl::ControllerConfig cfg;
    cfg.kind = *kind;
    cfg.r = number_or(j, "r", cfg.kind == ctrl::OptimizerKind::Adam ? 0.001 : 0.01);
    cfg.alpha = number_or(j, "alpha", 0.9);
    cfg.kp = number_or(j, "kp", 0.0);
    cfg.ki = number_or(j, "ki", 0.0);
    cfg.kd = number_or(j, "kd", 0.0);
    cfg.beta1 = number_or(j, "beta1", 0.9);
    cfg.beta2 = number_or(j, "beta2", 0.999);
    cfg.eps = number_or(j, "eps", 1e-8);

    if (cfg.kind == ctrl::OptimizerKind::LpfSgd || cfg.kind == ctrl::OptimizerKind::HpfSgd) {
        if (j.contains("iir")) {
            const json& f = j["iir"];
            ctrl::IIRCoeffs c;
            c.gain = require_number(f, where + ".iir", "gain");
            const auto read3 = [&](const char* key, std::array<double, 3>& out) {
                if (!f.contains(key) || !f[key].is_array() || f[key].size() != 3) {
                    throw InvalidConfigError(where + ".iir." + key, "expected 3 numbers");
                }
                for (int i = 0; i < 3; ++i) {
                    out[static_cast<std::size_t>(i)] = f[key][static_cast<std::size_t>(i)].get<double>();
                }
            };
            read3("num", c.num);
            read3("den", c.den);
            cfg.iir = c;
        } else {
            cfg.iir = cfg.kind == ctrl::OptimizerKind::LpfSgd ? ctrl::half_band_lowpass()
                                                              : ctrl::half_band_highpass();
        }
    }
    if (cfg.kind == ctrl::OptimizerKind::FuzzyPid) {
        fuzzy::FuzzyConfig fz = fuzzy::FuzzyConfig::defaults();
        if (j.contains("fuzzy")) {
            const json& f = j["fuzzy"];
            if (f.contains("phi")) {
                fz.phi = f["phi"].get<double>();
                fz.auto_phi = false;
            }
            if (f.contains("auto_phi")) {
                fz.auto_phi = f["auto_phi"].get<bool>();
            }
            if (f.contains("levels")) {
                fz.levels = f["levels"].get<int>();
            }
            const auto load_table = [&](const char* key, fuzzy::RuleTable& table) {
                if (f.contains(key)) {
                    table = fuzzy::load_rule_table_csv(f[key].get<std::string>(), fz.levels);
                }
            };
            load_table("rule_table_p", fz.rule_table_p);
            load_table("rule_table_i", fz.rule_table_i);
            load_table("rule_table_d", fz.rule_table_d);
        }
        cfg.fuzzy = fz;
    }
    cfg.validate();
    return cfg;
}

plant::LoopSpec parse_loop(const json& j) {
    if (!j.is_object()) {
        throw InvalidConfigError("loop", "expected an object");
    }
    plant::LoopSpec spec;
    const std::string topology = j.value("topology", "single");
    if (topology == "single") {
        spec.topology = plant::Topology::Single;
    } else if (topology == "gan") {
        spec.topology = plant::Topology::Gan;
    } else if (topology == "cyclegan") {
        spec.topology = plant::Topology::CycleGan;
    } else {
        throw InvalidConfigError("loop.topology", "unknown topology '" + topology + "'");
    }

    if (j.contains("controllers")) {
        for (const auto& [name, value] : j["controllers"].items()) {
            spec.controllers.emplace(name, parse_controller(value, "loop.controllers." + name));
        }
    }
    if (j.contains("plants")) {
        for (const auto& [name, value] : j["plants"].items()) {
            plant::PlantConfig pc;
            pc.pa = number_or(value, "pa", pc.pa);
            pc.pb = number_or(value, "pb", pc.pb);
            spec.plants.emplace(name, pc);
        }
    }
    // Branches without an explicit plant get the underdamped default.
    for (const auto& [name, cc] : spec.controllers) {
        if (!spec.plants.contains(name)) {
            spec.plants.emplace(name, plant::PlantConfig{});
        }
    }
    if (j.contains("sources")) {
        for (const auto& [port, value] : j["sources"].items()) {
            plant::SourceSpec src;
            const std::string kind = value.value("kind", "step");
            if (kind == "step") {
                src.kind = plant::SourceKind::Step;
            } else if (kind == "square") {
                src.kind = plant::SourceKind::Square;
            } else if (kind == "sine") {
                src.kind = plant::SourceKind::Sine;
            } else if (kind == "cosine") {
                src.kind = plant::SourceKind::Cosine;
            } else if (kind == "gaussian") {
                src.kind = plant::SourceKind::GaussianNoise;
            } else {
                throw InvalidConfigError("loop.sources." + port + ".kind",
                                         "unknown source kind '" + kind + "'");
            }
            src.amplitude = number_or(value, "amplitude", src.amplitude);
            src.period = number_or(value, "period", src.period);
            src.offset = number_or(value, "offset", src.offset);
            src.seed = value.value("seed", std::uint64_t{0});
            spec.sources.emplace(port, src);
        }
    }
    spec.validate();
    return spec;
}

sim::SimConfig parse_sim(const json& j) {
    sim::SimConfig cfg;
    if (j.is_object()) {
        cfg.dt = number_or(j, "dt", cfg.dt);
        cfg.horizon = number_or(j, "horizon", cfg.horizon);
        cfg.record_every = j.value("record_every", cfg.record_every);
        cfg.divergence_bound = number_or(j, "divergence_bound", cfg.divergence_bound);
    }
    cfg.validate();
    return cfg;
}

namespace {

toy::MLPSpec parse_mlp(const json& j, const std::string& where) {
    toy::MLPSpec spec;
    if (j.contains("widths")) {
        spec.layer_widths = j["widths"].get<std::vector<int>>();
    }
    const std::string activation = j.value("activation", "tanh");
    if (activation == "tanh") {
        spec.activation = toy::Activation::Tanh;
    } else if (activation == "relu") {
        spec.activation = toy::Activation::Relu;
    } else {
        throw InvalidConfigError(where + ".activation", "unknown activation '" + activation + "'");
    }
    const std::string output = j.value("output", "identity");
    if (output == "identity") {
        spec.output_activation = toy::OutputActivation::Identity;
    } else if (output == "sigmoid") {
        spec.output_activation = toy::OutputActivation::Sigmoid;
    } else {
        throw InvalidConfigError(where + ".output", "unknown output activation '" + output + "'");
    }
    spec.validate();
    return spec;
}

}  // namespace

TrainSetup parse_train(const json& j) {
    if (!j.is_object()) {
        throw InvalidConfigError("train", "expected an object");
    }
    TrainSetup setup;
    const std::string mode = j.value("mode", "gan");
    if (mode == "gan") {
        setup.mode = TrainSetup::Mode::Gan;
    } else if (mode == "cyclegan") {
        setup.mode = TrainSetup::Mode::CycleGan;
    } else {
        throw InvalidConfigError("train.mode", "unknown mode '" + mode + "'");
    }

    setup.config.epochs = j.value("epochs", setup.config.epochs);
    setup.config.batch_size = j.value("batch_size", setup.config.batch_size);
    setup.config.lr = number_or(j, "lr", setup.config.lr);
    setup.config.lambda_cyc = number_or(j, "lambda_cyc", setup.config.lambda_cyc);
    setup.config.seed = j.value("seed", std::uint64_t{0});
    setup.config.literal_adversarial = j.value("literal_adversarial", false);
    setup.config.eval_samples = j.value("eval_samples", setup.config.eval_samples);
    if (j.contains("optimizer")) {
        setup.config.optimizer = parse_controller(j["optimizer"], "train.optimizer");
    }
    setup.config.validate();

    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        const std::string kind = d.value("kind", "gaussian_mixture");
        if (kind == "gaussian_mixture") {
            setup.dataset.kind = toy::Dataset1D::Kind::GaussianMixture;
            if (d.contains("means")) {
                setup.dataset.means = d["means"].get<std::vector<double>>();
            }
            if (d.contains("stds")) {
                setup.dataset.stds = d["stds"].get<std::vector<double>>();
            }
            if (d.contains("weights")) {
                setup.dataset.weights = d["weights"].get<std::vector<double>>();
            }
        } else if (kind == "function_pair") {
            setup.dataset.kind = toy::Dataset1D::Kind::FunctionPair;
            if (d.contains("grid")) {
                setup.dataset.grid = d["grid"].get<std::vector<double>>();
            } else {
                const double x_min = number_or(d, "x_min", 0.0);
                const double x_max = number_or(d, "x_max", 6.283185307179586);
                const int points = d.value("points", 256);
                if (points < 2 || !(x_max > x_min)) {
                    throw InvalidConfigError("train.dataset", "bad grid range");
                }
                setup.dataset.grid.resize(static_cast<std::size_t>(points));
                for (int i = 0; i < points; ++i) {
                    setup.dataset.grid[static_cast<std::size_t>(i)] =
                        x_min + (x_max - x_min) * static_cast<double>(i) /
                                    static_cast<double>(points - 1);
                }
            }
        } else {
            throw InvalidConfigError("train.dataset.kind", "unknown dataset kind '" + kind + "'");
        }
        setup.dataset_n = d.value("n", setup.dataset_n);
    }
    setup.dataset.validate();

    if (j.contains("generator")) {
        setup.generator = parse_mlp(j["generator"], "train.generator");
    }
    if (j.contains("discriminator")) {
        setup.discriminator = parse_mlp(j["discriminator"], "train.discriminator");
    } else {
        setup.discriminator.output_activation = toy::OutputActivation::Sigmoid;
    }
    if (setup.discriminator.output_activation != toy::OutputActivation::Sigmoid) {
        throw InvalidConfigError("train.discriminator.output", "must be sigmoid");
    }

    if (setup.mode == TrainSetup::Mode::CycleGan) {
        setup.cycle_specs.ga = j.contains("generator_a")
                                   ? parse_mlp(j["generator_a"], "train.generator_a")
                                   : setup.generator;
        setup.cycle_specs.gb = j.contains("generator_b")
                                   ? parse_mlp(j["generator_b"], "train.generator_b")
                                   : setup.generator;
        setup.cycle_specs.da = j.contains("discriminator_a")
                                   ? parse_mlp(j["discriminator_a"], "train.discriminator_a")
                                   : setup.discriminator;
        setup.cycle_specs.db = j.contains("discriminator_b")
                                   ? parse_mlp(j["discriminator_b"], "train.discriminator_b")
                                   : setup.discriminator;
        if (setup.cycle_specs.da.output_activation != toy::OutputActivation::Sigmoid ||
            setup.cycle_specs.db.output_activation != toy::OutputActivation::Sigmoid) {
            throw InvalidConfigError("train.discriminator_a.output", "must be sigmoid");
        }
    }
    return setup;
}

void check_schema(const json& j) {
    if (!j.is_object() || !j.contains("schema")) {
        throw InvalidConfigError("schema", "missing schema version");
    }
    if (!j["schema"].is_number_integer() || j["schema"].get<int>() != 1) {
        throw InvalidConfigError("schema", "unsupported schema version");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidConfigError("path", "cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    out << contents;
}

}  // namespace optctl::io

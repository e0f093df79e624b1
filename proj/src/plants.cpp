#include "optctl/plants.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "optctl/errors.hpp"
#include "optctl/rng.hpp"

namespace optctl::plant {

namespace {

using Complex = std::complex<double>;

// (exp(z) - 1)/z with a series fallback near zero.
Complex expm1_over(Complex z) {
    if (std::abs(z) < 1e-8) {
        return 1.0 + z / 2.0 + z * z / 6.0;
    }
    return (std::exp(z) - 1.0) / z;
}

// Integral of tau*exp(lambda*tau) over [0, h].
Complex ramp_integral(Complex lambda, double h) {
    const Complex lh = lambda * h;
    if (std::abs(lh) < 1e-6) {
        // h^2 * (1/2 + lh/3 + lh^2/8 + lh^3/30)
        return h * h * (0.5 + lh / 3.0 + lh * lh / 8.0 + lh * lh * lh / 30.0);
    }
    const Complex e = std::exp(lh);
    return (h * e) / lambda - (e - 1.0) / (lambda * lambda);
}

}  // namespace

void PlantConfig::validate() const {
    if (!std::isfinite(pa) || !std::isfinite(pb)) {
        throw InvalidConfigError("plant", "pa and pb must be finite");
    }
}

DiscretePlant plant_discretize(const PlantConfig& cfg, double dt) {
    if (!(dt > 0.0)) {
        throw InvalidConfigError("dt", "must be > 0");
    }
    cfg.validate();

    // exp(A h) = phi0*I + phi1*A and its integral psi0*I + psi1*A, where A is
    // the companion form of s^2 + pa*s + pb. Everything runs in complex
    // arithmetic; conjugate eigenvalues make the results real.
    const Complex disc = std::sqrt(Complex(cfg.pa * cfg.pa - 4.0 * cfg.pb, 0.0));
    const Complex l1 = 0.5 * (-cfg.pa + disc);
    const Complex l2 = 0.5 * (-cfg.pa - disc);
    const double h = dt;

    Complex phi0, phi1, psi0, psi1;
    if (std::abs(l1 - l2) <= 1e-7 * (1.0 + std::abs(l1) + std::abs(l2))) {
        const Complex lm = 0.5 * (l1 + l2);
        const Complex e = std::exp(lm * h);
        phi1 = h * e;
        phi0 = e - lm * phi1;
        psi1 = ramp_integral(lm, h);
        psi0 = h * expm1_over(lm * h) - lm * psi1;
    } else {
        const Complex e1 = std::exp(l1 * h);
        const Complex e2 = std::exp(l2 * h);
        phi1 = (e1 - e2) / (l1 - l2);
        phi0 = e1 - l1 * phi1;
        const Complex i1 = h * expm1_over(l1 * h);
        const Complex i2 = h * expm1_over(l2 * h);
        psi1 = (i1 - i2) / (l1 - l2);
        psi0 = i1 - l1 * psi1;
    }

    // A = [[0, 1], [-pb, -pa]], B = [0, 1]^T.
    DiscretePlant out;
    out.dt = dt;
    out.ad[0][0] = phi0.real();
    out.ad[0][1] = phi1.real();
    out.ad[1][0] = -cfg.pb * phi1.real();
    out.ad[1][1] = phi0.real() - cfg.pa * phi1.real();
    out.bd[0] = psi1.real();
    out.bd[1] = psi0.real() - cfg.pa * psi1.real();
    return out;
}

double plant_step(const DiscretePlant& disc, PlantState& state, double u) {
    const double x1 = disc.ad[0][0] * state.x1 + disc.ad[0][1] * state.x2 + disc.bd[0] * u;
    const double x2 = disc.ad[1][0] * state.x1 + disc.ad[1][1] * state.x2 + disc.bd[1] * u;
    if (!std::isfinite(x1) || !std::isfinite(x2)) {
        throw NonFiniteStateError();
    }
    state.x1 = x1;
    state.x2 = x2;
    return state.x1;
}

const char* to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::Step:
            return "step";
        case SourceKind::Square:
            return "square";
        case SourceKind::Sine:
            return "sine";
        case SourceKind::Cosine:
            return "cosine";
        case SourceKind::GaussianNoise:
            return "gaussian";
    }
    return "unknown";
}

void SourceSpec::validate(const std::string& port) const {
    if (!std::isfinite(amplitude) || !std::isfinite(offset)) {
        throw InvalidConfigError("sources." + port, "amplitude and offset must be finite");
    }
    const bool periodic =
        kind == SourceKind::Square || kind == SourceKind::Sine || kind == SourceKind::Cosine;
    if (periodic && !(period > 0.0)) {
        throw InvalidConfigError("sources." + port + ".period", "must be > 0");
    }
}

double source_sample(const SourceSpec& spec, double t, std::uint64_t draw_index) {
    switch (spec.kind) {
        case SourceKind::Step:
            return spec.amplitude + spec.offset;
        case SourceKind::Square: {
            const double phase = std::fmod(t, spec.period);
            return (phase < 0.5 * spec.period ? spec.amplitude : -spec.amplitude) + spec.offset;
        }
        case SourceKind::Sine:
            return spec.amplitude * std::sin(2.0 * std::numbers::pi * t / spec.period) +
                   spec.offset;
        case SourceKind::Cosine:
            return spec.amplitude * std::cos(2.0 * std::numbers::pi * t / spec.period) +
                   spec.offset;
        case SourceKind::GaussianNoise:
            return spec.amplitude * rng::gaussian(spec.seed, draw_index) + spec.offset;
    }
    return 0.0;
}

const char* to_string(Topology topology) {
    switch (topology) {
        case Topology::Single:
            return "single";
        case Topology::Gan:
            return "gan";
        case Topology::CycleGan:
            return "cyclegan";
    }
    return "unknown";
}

namespace {

void require(const std::map<std::string, ctrl::ControllerConfig>& controllers,
             const std::map<std::string, PlantConfig>& plants, const std::string& branch) {
    if (!controllers.contains(branch)) {
        throw TopologyError("missing controller for branch '" + branch + "'");
    }
    if (!plants.contains(branch)) {
        throw TopologyError("missing plant for branch '" + branch + "'");
    }
}

void require_port(const std::map<std::string, SourceSpec>& sources, const std::string& port) {
    if (!sources.contains(port)) {
        throw TopologyError("missing source for port '" + port + "'");
    }
}

}  // namespace

void LoopSpec::validate() const {
    switch (topology) {
        case Topology::Single:
            require(controllers, plants, "G");
            require_port(sources, "reference");
            break;
        case Topology::Gan:
            require(controllers, plants, "G");
            require(controllers, plants, "D");
            require_port(sources, "d_reference");
            require_port(sources, "g_noise");
            break;
        case Topology::CycleGan:
            require(controllers, plants, "Ga");
            require(controllers, plants, "Gb");
            require(controllers, plants, "Da");
            require(controllers, plants, "Db");
            require_port(sources, "ga_reference");
            require_port(sources, "gb_reference");
            break;
    }
    for (const auto& [name, cc] : controllers) {
        cc.validate();
    }
    for (const auto& [name, pc] : plants) {
        pc.validate();
    }
    for (const auto& [port, src] : sources) {
        src.validate(port);
    }
}

LoopGraph::LoopGraph(LoopSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    switch (spec_.topology) {
        case Topology::Single:
            signal_names_ = {"e", "u_G", "y_G"};
            break;
        case Topology::Gan:
            signal_names_ = {"e", "u_G", "y_G", "u_D", "y_D"};
            break;
        case Topology::CycleGan:
            signal_names_ = {"e",    "u_Ga", "y_Ga", "u_Gb", "y_Gb",     "u_Da",
                             "y_Da", "u_Db", "y_Db", "y_cyc_ab", "y_cyc_ba"};
            break;
    }
    signals_.assign(signal_names_.size(), 0.0);
}

void LoopGraph::reset(double dt) {
    dt_ = dt;
    draw_index_ = 0;
    branches_.clear();
    cascades_.clear();
    for (const auto& [name, cc] : spec_.controllers) {
        Branch b;
        b.controller = cc;
        b.sample_state = ctrl::ctrl_init(cc);
        const bool momentum_kind =
            cc.kind == ctrl::OptimizerKind::Sgdm || cc.kind == ctrl::OptimizerKind::Pid;
        if (momentum_kind && cc.alpha > 0.0) {
            // Strictly proper remainder r/(s(s - ln alpha)) of the momentum
            // controller, reusing the second-order discretizer with
            // pa = -ln alpha, pb = 0.
            PlantConfig momentum_path{-std::log(cc.alpha), 0.0};
            b.ctrl_disc = plant_discretize(momentum_path, dt);
            b.has_ctrl_dynamics = true;
        }
        b.plant = plant_discretize(spec_.plants.at(name), dt);
        branches_.emplace(name, std::move(b));
    }
    if (spec_.topology == Topology::CycleGan) {
        // cyc_ab runs Ga's output through Gb's dynamics; cyc_ba the reverse.
        cascades_.emplace("cyc_ab", Cascade{plant_discretize(spec_.plants.at("Gb"), dt), {}, 0.0});
        cascades_.emplace("cyc_ba", Cascade{plant_discretize(spec_.plants.at("Ga"), dt), {}, 0.0});
    }
    std::fill(signals_.begin(), signals_.end(), 0.0);
}

const std::vector<double>& LoopGraph::step(double t) {
    if (dt_ <= 0.0) {
        throw TopologyError("loop graph not reset with a step size");
    }
    switch (spec_.topology) {
        case Topology::Single:
            step_single(t);
            break;
        case Topology::Gan:
            step_gan(t);
            break;
        case Topology::CycleGan:
            step_cyclegan(t);
            break;
    }
    return signals_;
}

double LoopGraph::controller_block(Branch& branch, double input) {
    const ctrl::ControllerConfig& cfg = branch.controller;
    double output = 0.0;
    switch (cfg.kind) {
        case ctrl::OptimizerKind::Sgd:
            output = cfg.r * input;
            break;
        case ctrl::OptimizerKind::Sgdm:
        case ctrl::OptimizerKind::Pid: {
            output = cfg.r * input;
            if (branch.has_ctrl_dynamics) {
                output += cfg.r * plant_step(branch.ctrl_disc, branch.ctrl_state, input);
            }
            if (cfg.kind == ctrl::OptimizerKind::Pid) {
                output += cfg.kd * (input - branch.prev_input) / dt_;
            }
            break;
        }
        case ctrl::OptimizerKind::FuzzyPid: {
            const fuzzy::FuzzyConfig& fz = *cfg.fuzzy;
            fuzzy::FuzzyConfig scaled = fz;
            if (fz.auto_phi) {
                if (branch.samples < fz.warmup_steps) {
                    branch.warm_sum += input;
                    branch.warm_sumsq += input * input;
                } else if (branch.phi_effective == 0.0) {
                    const double n = static_cast<double>(fz.warmup_steps);
                    const double mean = branch.warm_sum / n;
                    const double var = std::max(branch.warm_sumsq / n - mean * mean, 0.0);
                    const double sigma = std::sqrt(var);
                    branch.phi_effective = sigma > 0.0 ? 3.0 * sigma : fz.phi;
                }
                if (branch.phi_effective > 0.0) {
                    scaled.phi = branch.phi_effective;
                }
            }
            const double change = input - branch.prev_input;
            const fuzzy::PidGains gains =
                fuzzy::fuzzy_gains(scaled, {cfg.kp, cfg.ki, cfg.kd}, {input, change});
            branch.integral += input * dt_;
            output = cfg.r * (gains.kp * input + gains.ki * branch.integral +
                              gains.kd * change / dt_);
            break;
        }
        case ctrl::OptimizerKind::Adam:
        case ctrl::OptimizerKind::LpfSgd:
        case ctrl::OptimizerKind::HpfSgd:
            // Per-sample rules; feeding the negated input makes the descent
            // increment the positive-gain response.
            output = ctrl_step(cfg, branch.sample_state, -input);
            break;
    }
    branch.prev_input = input;
    ++branch.samples;
    return output;
}

void LoopGraph::step_single(double t) {
    Branch& g = branches_.at("G");
    const double reference = source_sample(spec_.sources.at("reference"), t, draw_index_++);
    const double e = reference - g.last_output;
    const double u = controller_block(g, e);
    const double y = plant_step(g.plant, g.plant_state, u);
    g.last_output = y;
    signals_ = {e, u, y};
}

void LoopGraph::step_gan(double t) {
    Branch& g = branches_.at("G");
    Branch& d = branches_.at("D");
    const double reference = source_sample(spec_.sources.at("d_reference"), t, draw_index_++);
    const double noise = source_sample(spec_.sources.at("g_noise"), t, draw_index_++);

    const double e = reference - d.last_output;
    const double u_g = controller_block(g, e);
    const double y_g = plant_step(g.plant, g.plant_state, u_g + noise);
    g.last_output = y_g;
    const double u_d = controller_block(d, y_g);
    const double y_d = plant_step(d.plant, d.plant_state, u_d);
    d.last_output = y_d;
    signals_ = {e, u_g, y_g, u_d, y_d};
}

void LoopGraph::step_cyclegan(double t) {
    Branch& ga = branches_.at("Ga");
    Branch& gb = branches_.at("Gb");
    Branch& da = branches_.at("Da");
    Branch& db = branches_.at("Db");
    Cascade& cyc_ab = cascades_.at("cyc_ab");
    Cascade& cyc_ba = cascades_.at("cyc_ba");

    const double ref_a = source_sample(spec_.sources.at("ga_reference"), t, draw_index_++);
    const double ref_b = source_sample(spec_.sources.at("gb_reference"), t, draw_index_++);

    // Shared error: reference mismatches of the two cycle paths plus the
    // (zero-referenced) discriminator outputs.
    const double e = (ref_a - cyc_ab.last_output) + (ref_b - cyc_ba.last_output) -
                     da.last_output - db.last_output;

    const double u_ga = controller_block(ga, e);
    const double y_ga = plant_step(ga.plant, ga.plant_state, u_ga);
    ga.last_output = y_ga;

    const double u_gb = controller_block(gb, e);
    const double y_gb = plant_step(gb.plant, gb.plant_state, u_gb);
    gb.last_output = y_gb;

    const double u_da = controller_block(da, e);
    const double y_da = plant_step(da.plant, da.plant_state, u_da);
    da.last_output = y_da;

    const double u_db = controller_block(db, e);
    const double y_db = plant_step(db.plant, db.plant_state, u_db);
    db.last_output = y_db;

    cyc_ab.last_output = plant_step(cyc_ab.plant, cyc_ab.state, y_ga);
    cyc_ba.last_output = plant_step(cyc_ba.plant, cyc_ba.state, y_gb);

    signals_ = {e,    u_ga, y_ga, u_gb, y_gb,
                u_da, y_da, u_db, y_db, cyc_ab.last_output, cyc_ba.last_output};
}

LoopGraph loop_wire(const LoopSpec& spec) { return LoopGraph(spec); }

}  // namespace optctl::plant

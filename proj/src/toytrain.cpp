#include "optctl/toytrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "optctl/errors.hpp"
#include "optctl/rng.hpp"

namespace optctl::toy {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double activate(Activation act, double x) {
    return act == Activation::Tanh ? std::tanh(x) : std::max(x, 0.0);
}

double activate_derivative(Activation act, double pre) {
    if (act == Activation::Tanh) {
        const double t = std::tanh(pre);
        return 1.0 - t * t;
    }
    return pre > 0.0 ? 1.0 : 0.0;
}

// dL/d(output pre-activation) given dL/d(output).
double output_pre_derivative(const MLPSpec& spec, double logit) {
    if (spec.output_activation == OutputActivation::Sigmoid) {
        const double s = sigmoid(logit);
        return s * (1.0 - s);
    }
    return 1.0;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    return rng::splitmix64(seed ^ rng::splitmix64(stream));
}

std::size_t index_draw(std::uint64_t seed, std::uint64_t counter, std::size_t n) {
    return static_cast<std::size_t>(rng::splitmix64(stream_seed(seed, counter)) % n);
}

double l2_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(std::span<const double> v) {
    MeanStd out;
    if (v.empty()) {
        return out;
    }
    for (double x : v) {
        out.mean += x;
    }
    out.mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) {
        var += (x - out.mean) * (x - out.mean);
    }
    out.std = std::sqrt(var / static_cast<double>(v.size()));
    return out;
}

}  // namespace

void MLPSpec::validate() const {
    if (layer_widths.size() < 2) {
        throw InvalidConfigError("layer_widths", "need at least input and output layers");
    }
    for (int w : layer_widths) {
        if (w < 1) {
            throw InvalidConfigError("layer_widths", "widths must be >= 1");
        }
    }
}

Mlp::Mlp(MLPSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    spec_.validate();
    if (spec_.layer_widths.front() != 1 || spec_.layer_widths.back() != 1) {
        throw InvalidConfigError("layer_widths", "scalar input and output expected");
    }
    int total = 0;
    const auto& w = spec_.layer_widths;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        weight_offsets_.push_back(total);
        total += w[l + 1] * w[l];
        bias_offsets_.push_back(total);
        total += w[l + 1];
    }
    params_.assign(static_cast<std::size_t>(total), 0.0);

    rng::Lcg lcg(seed);
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        const double scale = std::sqrt(6.0 / static_cast<double>(w[l] + w[l + 1]));
        double* weights = params_.data() + weight_offsets_[l];
        for (int i = 0; i < w[l + 1] * w[l]; ++i) {
            weights[i] = lcg.next_symmetric(scale);
        }
        // biases stay zero
    }
}

double Mlp::forward(double x) const {
    Tape tape;
    return forward(x, tape);
}

double Mlp::forward(double x, Tape& tape) const {
    const auto& w = spec_.layer_widths;
    const std::size_t layers = w.size() - 1;
    tape.inputs.assign(layers, {});
    tape.pre.assign(layers, {});

    std::vector<double> a{x};
    for (std::size_t l = 0; l < layers; ++l) {
        tape.inputs[l] = a;
        const double* weights = params_.data() + weight_offsets_[l];
        const double* biases = params_.data() + bias_offsets_[l];
        std::vector<double> pre(static_cast<std::size_t>(w[l + 1]));
        for (int i = 0; i < w[l + 1]; ++i) {
            double acc = biases[i];
            for (int j = 0; j < w[l]; ++j) {
                acc += weights[i * w[l] + j] * a[static_cast<std::size_t>(j)];
            }
            pre[static_cast<std::size_t>(i)] = acc;
        }
        tape.pre[l] = pre;
        if (l + 1 < layers) {
            for (double& p : pre) {
                p = activate(spec_.activation, p);
            }
        } else {
            tape.logit = pre[0];
            if (spec_.output_activation == OutputActivation::Sigmoid) {
                pre[0] = sigmoid(pre[0]);
            }
        }
        a = std::move(pre);
    }
    tape.output = a[0];
    return tape.output;
}

double Mlp::backward(const Tape& tape, double upstream, std::vector<double>& grads) const {
    const auto& w = spec_.layer_widths;
    const std::size_t layers = w.size() - 1;
    std::vector<double> delta{upstream};
    for (std::size_t l = layers; l-- > 0;) {
        const double* weights = params_.data() + weight_offsets_[l];
        double* weight_grads = grads.data() + weight_offsets_[l];
        double* bias_grads = grads.data() + bias_offsets_[l];
        const std::vector<double>& input = tape.inputs[l];

        std::vector<double> dx(static_cast<std::size_t>(w[l]), 0.0);
        for (int i = 0; i < w[l + 1]; ++i) {
            const double d = delta[static_cast<std::size_t>(i)];
            bias_grads[i] += d;
            for (int j = 0; j < w[l]; ++j) {
                weight_grads[i * w[l] + j] += d * input[static_cast<std::size_t>(j)];
                dx[static_cast<std::size_t>(j)] += d * weights[i * w[l] + j];
            }
        }
        if (l == 0) {
            return dx[0];
        }
        for (int j = 0; j < w[l]; ++j) {
            dx[static_cast<std::size_t>(j)] *=
                activate_derivative(spec_.activation, tape.pre[l - 1][static_cast<std::size_t>(j)]);
        }
        delta = std::move(dx);
    }
    return 0.0;
}

bool Mlp::finite() const {
    for (double p : params_) {
        if (!std::isfinite(p)) {
            return false;
        }
    }
    return true;
}

void TrainConfig::validate() const {
    if (epochs < 0) {
        throw InvalidConfigError("epochs", "must be >= 0");
    }
    if (batch_size < 1) {
        throw InvalidConfigError("batch_size", "must be >= 1");
    }
    if (!(lr > 0.0)) {
        throw InvalidConfigError("lr", "must be > 0");
    }
    if (lambda_cyc < 0.0) {
        throw InvalidConfigError("lambda_cyc", "must be >= 0");
    }
    if (eval_samples < 1) {
        throw InvalidConfigError("eval_samples", "must be >= 1");
    }
}

void Dataset1D::validate() const {
    if (kind == Kind::GaussianMixture) {
        if (means.empty() || means.size() != stds.size() || means.size() != weights.size()) {
            throw InvalidConfigError("dataset", "means/stds/weights must have equal nonzero size");
        }
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) {
                throw InvalidConfigError("dataset.weights", "must be nonnegative");
            }
            total += w;
        }
        if (std::fabs(total - 1.0) > 1e-9) {
            throw InvalidConfigError("dataset.weights", "must sum to 1");
        }
        for (double s : stds) {
            if (s < 0.0) {
                throw InvalidConfigError("dataset.stds", "must be nonnegative");
            }
        }
    } else {
        if (grid.empty()) {
            throw InvalidConfigError("dataset.grid", "must be nonempty");
        }
        for (std::size_t i = 1; i < grid.size(); ++i) {
            if (!(grid[i] > grid[i - 1])) {
                throw InvalidConfigError("dataset.grid", "must be strictly increasing");
            }
        }
    }
}

Samples make_dataset(const Dataset1D& spec, int n, std::uint64_t seed) {
    spec.validate();
    if (n < 1) {
        throw InvalidConfigError("n", "must be >= 1");
    }
    Samples out;
    if (spec.kind == Dataset1D::Kind::GaussianMixture) {
        out.a.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double u =
                rng::uniform(seed, static_cast<std::uint64_t>(2 * i), 0.0, 1.0);
            std::size_t component = spec.weights.size() - 1;
            double cumulative = 0.0;
            for (std::size_t c = 0; c < spec.weights.size(); ++c) {
                cumulative += spec.weights[c];
                if (u < cumulative) {
                    component = c;
                    break;
                }
            }
            out.a[static_cast<std::size_t>(i)] =
                spec.means[component] +
                spec.stds[component] * rng::gaussian(seed, static_cast<std::uint64_t>(2 * i + 1));
        }
    } else {
        out.a.resize(static_cast<std::size_t>(n));
        out.b.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double x = spec.grid[static_cast<std::size_t>(i) % spec.grid.size()];
            out.a[static_cast<std::size_t>(i)] = std::sin(x);
            out.b[static_cast<std::size_t>(i)] = std::cos(x);
        }
    }
    return out;
}

namespace {

void require_sigmoid(const Mlp& disc, const char* which) {
    if (disc.spec().output_activation != OutputActivation::Sigmoid) {
        throw InvalidConfigError(which, "discriminator needs a sigmoid output");
    }
}

// Adds the discriminator objective for one (real, fake) pair of batches.
void disc_batch(const Mlp& disc, std::span<const double> real, std::span<const double> fake,
                std::vector<double>& grads, double& loss) {
    Mlp::Tape tape;
    const double inv_r = 1.0 / static_cast<double>(real.size());
    for (double x : real) {
        disc.forward(x, tape);
        loss += softplus(-tape.logit) * inv_r;  // -log D(x)
        disc.backward(tape, (sigmoid(tape.logit) - 1.0) * inv_r, grads);
    }
    const double inv_f = 1.0 / static_cast<double>(fake.size());
    for (double x : fake) {
        disc.forward(x, tape);
        loss += softplus(tape.logit) * inv_f;  // -log(1 - D(fake))
        disc.backward(tape, sigmoid(tape.logit) * inv_f, grads);
    }
}

// Generator-side adversarial term for one fake sample; returns dL/d(fake)
// and adds the sample loss.
double adversarial_pull(const Mlp& disc, double fake, bool literal, double inv_batch,
                        std::vector<double>& scratch, double& loss) {
    Mlp::Tape tape;
    const double d = disc.forward(fake, tape);
    double upstream;
    if (literal) {
        loss += std::log1p(d) * inv_batch;  // +log(1 + D)
        upstream = d * (1.0 - d) / (1.0 + d) * inv_batch;
    } else {
        loss += softplus(-tape.logit) * inv_batch;  // -log D
        upstream = (sigmoid(tape.logit) - 1.0) * inv_batch;
    }
    return disc.backward(tape, upstream, scratch);
}

}  // namespace

std::vector<double> gan_disc_grads(const Mlp& gen, const Mlp& disc, std::span<const double> real,
                                   std::span<const double> noise, double* loss_out) {
    require_sigmoid(disc, "disc");
    std::vector<double> grads(disc.param_count(), 0.0);
    std::vector<double> fake(noise.size());
    for (std::size_t i = 0; i < noise.size(); ++i) {
        fake[i] = gen.forward(noise[i]);
    }
    double loss = 0.0;
    disc_batch(disc, real, fake, grads, loss);
    if (loss_out != nullptr) {
        *loss_out = loss;
    }
    return grads;
}

std::vector<double> gan_gen_grads(const Mlp& gen, const Mlp& disc, std::span<const double> noise,
                                  bool literal_adversarial, double* loss_out) {
    require_sigmoid(disc, "disc");
    std::vector<double> grads(gen.param_count(), 0.0);
    std::vector<double> scratch(disc.param_count(), 0.0);
    double loss = 0.0;
    const double inv = 1.0 / static_cast<double>(noise.size());
    Mlp::Tape tape_g;
    for (double z : noise) {
        const double fake = gen.forward(z, tape_g);
        const double dfake =
            adversarial_pull(disc, fake, literal_adversarial, inv, scratch, loss);
        gen.backward(tape_g, dfake * output_pre_derivative(gen.spec(), tape_g.logit), grads);
    }
    if (loss_out != nullptr) {
        *loss_out = loss;
    }
    return grads;
}

CycleDiscGrads cycle_disc_grads(const CycleNets& nets, std::span<const double> batch_a,
                                std::span<const double> batch_b) {
    require_sigmoid(nets.da, "da");
    require_sigmoid(nets.db, "db");
    CycleDiscGrads out;
    out.da.assign(nets.da.param_count(), 0.0);
    out.db.assign(nets.db.param_count(), 0.0);

    std::vector<double> fake_b(batch_a.size());
    for (std::size_t i = 0; i < batch_a.size(); ++i) {
        fake_b[i] = nets.ga.forward(batch_a[i]);
    }
    std::vector<double> fake_a(batch_b.size());
    for (std::size_t i = 0; i < batch_b.size(); ++i) {
        fake_a[i] = nets.gb.forward(batch_b[i]);
    }
    disc_batch(nets.db, batch_b, fake_b, out.db, out.loss);
    disc_batch(nets.da, batch_a, fake_a, out.da, out.loss);
    return out;
}

CycleGenGrads cycle_gen_grads(const CycleNets& nets, std::span<const double> batch_a,
                              std::span<const double> batch_b, double lambda_cyc,
                              bool literal_adversarial) {
    require_sigmoid(nets.da, "da");
    require_sigmoid(nets.db, "db");
    CycleGenGrads out;
    out.ga.assign(nets.ga.param_count(), 0.0);
    out.gb.assign(nets.gb.param_count(), 0.0);
    std::vector<double> scratch_da(nets.da.param_count(), 0.0);
    std::vector<double> scratch_db(nets.db.param_count(), 0.0);

    Mlp::Tape tape_fwd;
    Mlp::Tape tape_rec;
    const double inv_a = 1.0 / static_cast<double>(batch_a.size());
    for (double a : batch_a) {
        const double fab = nets.ga.forward(a, tape_fwd);
        double dfab = adversarial_pull(nets.db, fab, literal_adversarial, inv_a, scratch_db,
                                       out.loss);
        const double rec = nets.gb.forward(fab, tape_rec);
        out.cycle_term += std::fabs(rec - a) * inv_a;
        if (lambda_cyc != 0.0) {
            const double sign = rec > a ? 1.0 : (rec < a ? -1.0 : 0.0);
            const double drec = lambda_cyc * sign * inv_a;
            dfab += nets.gb.backward(
                tape_rec, drec * output_pre_derivative(nets.gb.spec(), tape_rec.logit), out.gb);
        }
        nets.ga.backward(tape_fwd, dfab * output_pre_derivative(nets.ga.spec(), tape_fwd.logit),
                         out.ga);
    }
    const double inv_b = 1.0 / static_cast<double>(batch_b.size());
    double cycle_b = 0.0;
    for (double b : batch_b) {
        const double fba = nets.gb.forward(b, tape_fwd);
        double dfba = adversarial_pull(nets.da, fba, literal_adversarial, inv_b, scratch_da,
                                       out.loss);
        const double rec = nets.ga.forward(fba, tape_rec);
        cycle_b += std::fabs(rec - b) * inv_b;
        if (lambda_cyc != 0.0) {
            const double sign = rec > b ? 1.0 : (rec < b ? -1.0 : 0.0);
            const double drec = lambda_cyc * sign * inv_b;
            dfba += nets.ga.backward(
                tape_rec, drec * output_pre_derivative(nets.ga.spec(), tape_rec.logit), out.ga);
        }
        nets.gb.backward(tape_fwd, dfba * output_pre_derivative(nets.gb.spec(), tape_fwd.logit),
                         out.gb);
    }
    out.loss += lambda_cyc * (out.cycle_term + cycle_b);
    return out;
}

namespace {

class ParamUpdater {
  public:
    ParamUpdater(const ctrl::ControllerConfig& cfg, std::size_t count) : cfg_(cfg) {
        states_.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            states_.push_back(ctrl::ctrl_init(cfg));
        }
    }

    // Returns false when an update could not be applied (non-finite grad).
    bool apply(std::vector<double>& params, std::span<const double> grads) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!std::isfinite(grads[i])) {
                return false;
            }
            params[i] += ctrl::ctrl_step(cfg_, states_[i], grads[i]);
        }
        return true;
    }

  private:
    ctrl::ControllerConfig cfg_;
    std::vector<ctrl::ControllerState> states_;
};

}  // namespace

TrainReport train_gan_toy(std::span<const double> data, const MLPSpec& gen_spec,
                          const MLPSpec& disc_spec, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) {
        throw InvalidConfigError("data", "must be nonempty");
    }
    ctrl::ControllerConfig opt = cfg.optimizer;
    opt.r = cfg.lr;
    opt.validate();

    Mlp gen(gen_spec, stream_seed(cfg.seed, 1));
    Mlp disc(disc_spec, stream_seed(cfg.seed, 2));
    require_sigmoid(disc, "disc");

    ParamUpdater gen_updater(opt, gen.param_count());
    ParamUpdater disc_updater(opt, disc.param_count());

    const MeanStd data_stats = mean_std(data);
    const std::uint64_t noise_seed = stream_seed(cfg.seed, 3);
    const std::uint64_t eval_seed = stream_seed(cfg.seed, 4);
    std::vector<double> eval_z(static_cast<std::size_t>(cfg.eval_samples));
    for (std::size_t i = 0; i < eval_z.size(); ++i) {
        eval_z[i] = rng::gaussian(eval_seed, i);
    }

    TrainReport report;
    const std::size_t n = data.size();
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t steps_per_epoch = std::max<std::size_t>(1, n / batch);
    std::uint64_t noise_counter = 0;
    std::size_t real_index = 0;

    std::vector<double> real_batch(batch);
    std::vector<double> noise_batch(batch);
    std::vector<double> generated(eval_z.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Pre-epoch snapshot; entry 0 describes the untrained network.
        report.theta_norm.push_back(l2_norm(gen.params()));
        for (std::size_t i = 0; i < eval_z.size(); ++i) {
            generated[i] = gen.forward(eval_z[i]);
        }
        const MeanStd gen_stats = mean_std(generated);
        report.mean_error.push_back(std::fabs(gen_stats.mean - data_stats.mean));
        report.std_error.push_back(std::fabs(gen_stats.std - data_stats.std));

        double epoch_gen_loss = 0.0;
        double epoch_disc_loss = 0.0;
        std::size_t completed = 0;
        bool dead = false;
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            for (std::size_t j = 0; j < batch; ++j) {
                real_batch[j] = data[real_index++ % n];
                noise_batch[j] = rng::gaussian(noise_seed, noise_counter++);
            }
            double d_loss = 0.0;
            const std::vector<double> d_grads =
                gan_disc_grads(gen, disc, real_batch, noise_batch, &d_loss);
            if (!disc_updater.apply(disc.params(), d_grads) || !disc.finite()) {
                dead = true;
                break;
            }
            for (std::size_t j = 0; j < batch; ++j) {
                noise_batch[j] = rng::gaussian(noise_seed, noise_counter++);
            }
            double g_loss = 0.0;
            const std::vector<double> g_grads =
                gan_gen_grads(gen, disc, noise_batch, cfg.literal_adversarial, &g_loss);
            if (!gen_updater.apply(gen.params(), g_grads) || !gen.finite()) {
                dead = true;
                break;
            }
            epoch_disc_loss += d_loss;
            epoch_gen_loss += g_loss;
            ++completed;
        }
        const double denom = static_cast<double>(std::max<std::size_t>(1, completed));
        report.gen_loss.push_back(epoch_gen_loss / denom);
        report.disc_loss.push_back(epoch_disc_loss / denom);
        if (dead) {
            report.diverged = true;
            break;
        }
    }
    return report;
}

TrainReport train_cyclegan_toy(const Samples& pairs, const CycleSpecs& specs,
                               const TrainConfig& cfg, const std::optional<CycleInit>& init) {
    cfg.validate();
    if (pairs.a.empty() || pairs.b.empty()) {
        throw InvalidConfigError("pairs", "both sample sides must be nonempty");
    }
    ctrl::ControllerConfig opt = cfg.optimizer;
    opt.r = cfg.lr;
    opt.validate();

    CycleNets nets{Mlp(specs.ga, stream_seed(cfg.seed, 11)), Mlp(specs.gb, stream_seed(cfg.seed, 12)),
                   Mlp(specs.da, stream_seed(cfg.seed, 13)), Mlp(specs.db, stream_seed(cfg.seed, 14))};
    if (init.has_value()) {
        auto load = [](Mlp& net, const std::vector<double>& values, const char* which) {
            if (values.size() != net.param_count()) {
                throw InvalidConfigError(which, "initial parameter count mismatch");
            }
            net.params() = values;
        };
        load(nets.ga, init->ga, "init.ga");
        load(nets.gb, init->gb, "init.gb");
        load(nets.da, init->da, "init.da");
        load(nets.db, init->db, "init.db");
    }
    require_sigmoid(nets.da, "da");
    require_sigmoid(nets.db, "db");

    ParamUpdater ga_updater(opt, nets.ga.param_count());
    ParamUpdater gb_updater(opt, nets.gb.param_count());
    ParamUpdater da_updater(opt, nets.da.param_count());
    ParamUpdater db_updater(opt, nets.db.param_count());

    const MeanStd b_stats = mean_std(pairs.b);
    const std::uint64_t index_seed = stream_seed(cfg.seed, 21);

    TrainReport report;
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t steps_per_epoch =
        std::max<std::size_t>(1, std::min(pairs.a.size(), pairs.b.size()) / batch);
    std::uint64_t draw_counter = 0;

    std::vector<double> batch_a(batch);
    std::vector<double> batch_b(batch);
    std::vector<double> mapped(pairs.a.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Pre-epoch snapshot over the full sample sides.
        double norm_sq = 0.0;
        for (double p : nets.ga.params()) {
            norm_sq += p * p;
        }
        for (double p : nets.gb.params()) {
            norm_sq += p * p;
        }
        report.theta_norm.push_back(std::sqrt(norm_sq));

        double cycle_err = 0.0;
        for (std::size_t i = 0; i < pairs.a.size(); ++i) {
            mapped[i] = nets.ga.forward(pairs.a[i]);
            cycle_err += std::fabs(nets.gb.forward(mapped[i]) - pairs.a[i]);
        }
        cycle_err /= static_cast<double>(pairs.a.size());
        report.cycle_error.push_back(cycle_err);
        const MeanStd mapped_stats = mean_std(mapped);
        report.mean_error.push_back(std::fabs(mapped_stats.mean - b_stats.mean));
        report.std_error.push_back(std::fabs(mapped_stats.std - b_stats.std));

        double epoch_gen_loss = 0.0;
        double epoch_disc_loss = 0.0;
        std::size_t completed = 0;
        bool dead = false;
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            // Unpaired sampling: independent index draws from each side.
            for (std::size_t j = 0; j < batch; ++j) {
                batch_a[j] = pairs.a[index_draw(index_seed, draw_counter++, pairs.a.size())];
                batch_b[j] = pairs.b[index_draw(index_seed, draw_counter++, pairs.b.size())];
            }
            const CycleDiscGrads d = cycle_disc_grads(nets, batch_a, batch_b);
            if (!da_updater.apply(nets.da.params(), d.da) ||
                !db_updater.apply(nets.db.params(), d.db) || !nets.da.finite() ||
                !nets.db.finite()) {
                dead = true;
                break;
            }
            for (std::size_t j = 0; j < batch; ++j) {
                batch_a[j] = pairs.a[index_draw(index_seed, draw_counter++, pairs.a.size())];
                batch_b[j] = pairs.b[index_draw(index_seed, draw_counter++, pairs.b.size())];
            }
            const CycleGenGrads g =
                cycle_gen_grads(nets, batch_a, batch_b, cfg.lambda_cyc, cfg.literal_adversarial);
            if (!ga_updater.apply(nets.ga.params(), g.ga) ||
                !gb_updater.apply(nets.gb.params(), g.gb) || !nets.ga.finite() ||
                !nets.gb.finite()) {
                dead = true;
                break;
            }
            epoch_disc_loss += d.loss;
            epoch_gen_loss += g.loss;
            ++completed;
        }
        const double denom = static_cast<double>(std::max<std::size_t>(1, completed));
        report.gen_loss.push_back(epoch_gen_loss / denom);
        report.disc_loss.push_back(epoch_disc_loss / denom);
        if (dead) {
            report.diverged = true;
            break;
        }
    }
    return report;
}

double consistency_score(const TrainReport& report, const sim::Trace& trace,
                         const std::string& signal) {
    const std::vector<double>& theta = report.theta_norm;
    const std::vector<double>& raw = trace.signal(signal);
    if (theta.size() < 10) {
        throw InsufficientDataError("need at least 10 epochs, got " +
                                    std::to_string(theta.size()));
    }
    if (raw.size() < 10) {
        throw InsufficientDataError("need at least 10 trace samples, got " +
                                    std::to_string(raw.size()));
    }

    // Resample the trace onto the epoch axis by linear interpolation.
    const std::size_t epochs = theta.size();
    std::vector<double> resampled(epochs);
    for (std::size_t k = 0; k < epochs; ++k) {
        const double pos = static_cast<double>(k) * static_cast<double>(raw.size() - 1) /
                           static_cast<double>(epochs - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        resampled[k] = lo + 1 < raw.size() ? raw[lo] * (1.0 - frac) + raw[lo + 1] * frac
                                           : raw[lo];
    }

    auto normalize_envelope = [](const std::vector<double>& v, std::vector<double>& out) {
        const MeanStd stats = mean_std(v);
        if (stats.std < 1e-15) {
            return false;
        }
        out.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            out[i] = std::fabs((v[i] - stats.mean) / stats.std);
        }
        return true;
    };
    std::vector<double> env_theta;
    std::vector<double> env_trace;
    if (!normalize_envelope(theta, env_theta) || !normalize_envelope(resampled, env_trace)) {
        return 0.0;
    }
    const MeanStd sa = mean_std(env_theta);
    const MeanStd sb = mean_std(env_trace);
    if (sa.std < 1e-15 || sb.std < 1e-15) {
        return 0.0;
    }
    double cov = 0.0;
    for (std::size_t i = 0; i < env_theta.size(); ++i) {
        cov += (env_theta[i] - sa.mean) * (env_trace[i] - sb.mean);
    }
    cov /= static_cast<double>(env_theta.size());
    return cov / (sa.std * sb.std);
}

}  // namespace optctl::toy

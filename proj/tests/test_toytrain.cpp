#include <cmath>

#include "doctest.h"
#include "optctl/controllers.hpp"
#include "optctl/errors.hpp"
#include "optctl/toytrain.hpp"
#include "support.hpp"

using optctl::ctrl::ControllerConfig;
using optctl::toy::Activation;
using optctl::toy::consistency_score;
using optctl::toy::CycleInit;
using optctl::toy::CycleNets;
using optctl::toy::CycleSpecs;
using optctl::toy::Dataset1D;
using optctl::toy::gan_disc_grads;
using optctl::toy::gan_gen_grads;
using optctl::toy::make_dataset;
using optctl::toy::Mlp;
using optctl::toy::MLPSpec;
using optctl::toy::OutputActivation;
using optctl::toy::Samples;
using optctl::toy::TrainConfig;
using optctl::toy::train_cyclegan_toy;
using optctl::toy::train_gan_toy;
using optctl::toy::TrainReport;

namespace {

MLPSpec tiny_net(std::vector<int> widths, OutputActivation out) {
    MLPSpec spec;
    spec.layer_widths = std::move(widths);
    spec.activation = Activation::Tanh;
    spec.output_activation = out;
    return spec;
}

// Exact identity map: relu(x) - relu(-x).
Mlp identity_relu() {
    MLPSpec spec;
    spec.layer_widths = {1, 2, 1};
    spec.activation = Activation::Relu;
    spec.output_activation = OutputActivation::Identity;
    Mlp net(spec, 0);
    net.params() = {1.0, -1.0, 0.0, 0.0, 1.0, -1.0, 0.0};
    return net;
}

TrainConfig quick_config(int epochs, int batch, double lr, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.lr = lr;
    cfg.optimizer = ControllerConfig::adam();
    cfg.seed = seed;
    cfg.eval_samples = 128;
    return cfg;
}

bool reports_equal(const TrainReport& a, const TrainReport& b) {
    return a.gen_loss == b.gen_loss && a.disc_loss == b.disc_loss &&
           a.theta_norm == b.theta_norm && a.mean_error == b.mean_error &&
           a.std_error == b.std_error && a.cycle_error == b.cycle_error &&
           a.diverged == b.diverged;
}

}  // namespace

TEST_CASE("datasets are deterministic and match their parameters") {
    Dataset1D degenerate;
    degenerate.means = {1.5};
    degenerate.stds = {0.0};
    degenerate.weights = {1.0};
    const Samples constant = make_dataset(degenerate, 64, 9);
    for (double v : constant.a) {
        CHECK(v == doctest::Approx(1.5));
    }

    Dataset1D symmetric;  // defaults: components at +-2, equal weights
    const Samples big = make_dataset(symmetric, 10000, 4);
    double mean = 0.0;
    for (double v : big.a) {
        mean += v;
    }
    mean /= static_cast<double>(big.a.size());
    CHECK(std::fabs(mean) < 0.1);

    const Samples again = make_dataset(symmetric, 10000, 4);
    CHECK(big.a == again.a);

    Dataset1D pair;
    pair.kind = Dataset1D::Kind::FunctionPair;
    pair.grid = {0.0, 1.0, 2.0};
    const Samples waves = make_dataset(pair, 3, 0);
    CHECK(waves.a[0] == doctest::Approx(0.0));
    CHECK(waves.b[0] == doctest::Approx(1.0));
    CHECK(waves.a[1] == doctest::Approx(std::sin(1.0)));
    CHECK(waves.b[1] == doctest::Approx(std::cos(1.0)));
}

TEST_CASE("network initialization is reproducible and finite") {
    const MLPSpec spec = tiny_net({1, 16, 16, 1}, OutputActivation::Identity);
    const Mlp a(spec, 77);
    const Mlp b(spec, 77);
    const Mlp c(spec, 78);
    CHECK(a.params() == b.params());
    CHECK(a.params() != c.params());
    CHECK(a.finite());
    CHECK(a.param_count() == 16 + 16 + 16 * 16 + 16 + 16 + 1);
}

TEST_CASE("identity network computes the identity") {
    const Mlp net = identity_relu();
    for (double x : {-2.0, -0.3, 0.0, 0.7, 3.5}) {
        CHECK(net.forward(x) == doctest::Approx(x).epsilon(1e-15));
    }
}

TEST_CASE("backpropagated gradients match central differences") {
    const double fd_step = 1e-5;
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint64_t seed = 3000 + static_cast<std::uint64_t>(trial);
        const MLPSpec gen_spec = tiny_net({1, 4, 1}, OutputActivation::Identity);
        const MLPSpec disc_spec = tiny_net({1, 4, 1}, OutputActivation::Sigmoid);
        Mlp gen(gen_spec, seed);
        Mlp disc(disc_spec, seed + 1);
        REQUIRE(gen.param_count() + disc.param_count() <= 50);

        std::vector<double> real(8);
        std::vector<double> noise(8);
        for (std::size_t i = 0; i < real.size(); ++i) {
            real[i] = testsupport::draw(seed, 10 + i, -1.5, 1.5);
            noise[i] = testsupport::draw(seed, 50 + i, -1.0, 1.0);
        }
        const bool literal = trial % 2 == 1;

        // Discriminator objective.
        {
            const std::vector<double> grads = gan_disc_grads(gen, disc, real, noise);
            for (std::size_t p = 0; p < disc.param_count(); ++p) {
                double plus = 0.0, minus = 0.0;
                disc.params()[p] += fd_step;
                gan_disc_grads(gen, disc, real, noise, &plus);
                disc.params()[p] -= 2.0 * fd_step;
                gan_disc_grads(gen, disc, real, noise, &minus);
                disc.params()[p] += fd_step;
                const double fd = (plus - minus) / (2.0 * fd_step);
                const double scale = std::max({1e-6, std::fabs(fd), std::fabs(grads[p])});
                CHECK(std::fabs(grads[p] - fd) / scale < 1e-4);
                ++checked;
            }
        }
        // Generator objective, both adversarial variants.
        {
            const std::vector<double> grads = gan_gen_grads(gen, disc, noise, literal);
            for (std::size_t p = 0; p < gen.param_count(); ++p) {
                double plus = 0.0, minus = 0.0;
                gen.params()[p] += fd_step;
                gan_gen_grads(gen, disc, noise, literal, &plus);
                gen.params()[p] -= 2.0 * fd_step;
                gan_gen_grads(gen, disc, noise, literal, &minus);
                gen.params()[p] += fd_step;
                const double fd = (plus - minus) / (2.0 * fd_step);
                const double scale = std::max({1e-6, std::fabs(fd), std::fabs(grads[p])});
                CHECK(std::fabs(grads[p] - fd) / scale < 1e-4);
                ++checked;
            }
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("cycle gradients match central differences") {
    const double fd_step = 1e-5;
    for (int trial = 0; trial < 6; ++trial) {
        const std::uint64_t seed = 3300 + static_cast<std::uint64_t>(trial);
        CycleNets nets{Mlp(tiny_net({1, 3, 1}, OutputActivation::Identity), seed),
                       Mlp(tiny_net({1, 3, 1}, OutputActivation::Identity), seed + 1),
                       Mlp(tiny_net({1, 3, 1}, OutputActivation::Sigmoid), seed + 2),
                       Mlp(tiny_net({1, 3, 1}, OutputActivation::Sigmoid), seed + 3)};
        std::vector<double> batch_a(6);
        std::vector<double> batch_b(6);
        for (std::size_t i = 0; i < batch_a.size(); ++i) {
            batch_a[i] = testsupport::draw(seed, 10 + i, -1.0, 1.0);
            batch_b[i] = testsupport::draw(seed, 40 + i, -1.0, 1.0);
        }
        const double lambda = trial % 2 == 0 ? 2.5 : 0.0;

        const auto grads = cycle_gen_grads(nets, batch_a, batch_b, lambda, false);
        const auto loss_of = [&]() {
            return cycle_gen_grads(nets, batch_a, batch_b, lambda, false).loss;
        };
        for (std::size_t p = 0; p < nets.ga.param_count(); ++p) {
            nets.ga.params()[p] += fd_step;
            const double plus = loss_of();
            nets.ga.params()[p] -= 2.0 * fd_step;
            const double minus = loss_of();
            nets.ga.params()[p] += fd_step;
            const double fd = (plus - minus) / (2.0 * fd_step);
            const double scale = std::max({1e-6, std::fabs(fd), std::fabs(grads.ga[p])});
            CHECK(std::fabs(grads.ga[p] - fd) / scale < 1e-4);
        }
        for (std::size_t p = 0; p < nets.gb.param_count(); ++p) {
            nets.gb.params()[p] += fd_step;
            const double plus = loss_of();
            nets.gb.params()[p] -= 2.0 * fd_step;
            const double minus = loss_of();
            nets.gb.params()[p] += fd_step;
            const double fd = (plus - minus) / (2.0 * fd_step);
            const double scale = std::max({1e-6, std::fabs(fd), std::fabs(grads.gb[p])});
            CHECK(std::fabs(grads.gb[p] - fd) / scale < 1e-4);
        }
    }
}

TEST_CASE("a zero cycle weight leaves no cycle gradient") {
    const std::uint64_t seed = 3500;
    CycleNets nets{Mlp(tiny_net({1, 3, 1}, OutputActivation::Identity), seed),
                   Mlp(tiny_net({1, 3, 1}, OutputActivation::Identity), seed + 1),
                   Mlp(tiny_net({1, 3, 1}, OutputActivation::Sigmoid), seed + 2),
                   Mlp(tiny_net({1, 3, 1}, OutputActivation::Sigmoid), seed + 3)};
    const std::vector<double> batch_a{0.3, -0.4, 0.9};
    const std::vector<double> batch_b{0.1, 0.5, -0.8};

    // Compare against a hand-assembled adversarial-only gradient.
    const auto with_zero = cycle_gen_grads(nets, batch_a, batch_b, 0.0, false);
    std::vector<double> adv_only_ga(nets.ga.param_count(), 0.0);
    {
        std::vector<double> scratch(nets.db.param_count(), 0.0);
        Mlp::Tape tape_g;
        Mlp::Tape tape_d;
        const double inv = 1.0 / static_cast<double>(batch_a.size());
        for (double a : batch_a) {
            const double fake = nets.ga.forward(a, tape_g);
            nets.db.forward(fake, tape_d);
            const double sig = 1.0 / (1.0 + std::exp(-tape_d.logit));
            const double dfake = nets.db.backward(tape_d, (sig - 1.0) * inv, scratch);
            nets.ga.backward(tape_g, dfake, adv_only_ga);
        }
    }
    for (std::size_t p = 0; p < adv_only_ga.size(); ++p) {
        CHECK(with_zero.ga[p] == adv_only_ga[p]);
    }
    CHECK(with_zero.cycle_term > 0.0);  // the diagnostic is still measured
}

TEST_CASE("zero-epoch training is a no-op") {
    const Samples data = make_dataset(Dataset1D{}, 256, 5);
    TrainConfig cfg = quick_config(0, 32, 1e-3, 5);
    const TrainReport report =
        train_gan_toy(data.a, tiny_net({1, 8, 1}, OutputActivation::Identity),
                      tiny_net({1, 8, 1}, OutputActivation::Sigmoid), cfg);
    CHECK(report.gen_loss.empty());
    CHECK(report.theta_norm.empty());
    CHECK_FALSE(report.diverged);
}

TEST_CASE("training runs replay bit-identically") {
    const Samples data = make_dataset(Dataset1D{}, 256, 6);
    const TrainConfig cfg = quick_config(3, 32, 1e-3, 6);
    const MLPSpec gen = tiny_net({1, 8, 1}, OutputActivation::Identity);
    const MLPSpec disc = tiny_net({1, 8, 1}, OutputActivation::Sigmoid);
    const TrainReport a = train_gan_toy(data.a, gen, disc, cfg);
    const TrainReport b = train_gan_toy(data.a, gen, disc, cfg);
    CHECK(reports_equal(a, b));
    CHECK(a.theta_norm.size() == 3);
}

TEST_CASE("descent-controller updates equal the hand-written loop") {
    const MLPSpec gen_spec = tiny_net({1, 6, 1}, OutputActivation::Identity);
    const MLPSpec disc_spec = tiny_net({1, 6, 1}, OutputActivation::Sigmoid);
    Mlp controlled(gen_spec, 42);
    Mlp manual(gen_spec, 42);
    const Mlp disc(disc_spec, 43);

    const double rate = 0.05;
    const ControllerConfig sgd = ControllerConfig::sgd(rate);
    std::vector<optctl::ctrl::ControllerState> states;
    for (std::size_t i = 0; i < controlled.param_count(); ++i) {
        states.push_back(optctl::ctrl::ctrl_init(sgd));
    }

    std::vector<double> noise(8);
    for (int step = 0; step < 100; ++step) {
        for (std::size_t i = 0; i < noise.size(); ++i) {
            noise[i] = optctl::rng::gaussian(91, static_cast<std::uint64_t>(step) * 8 + i);
        }
        const std::vector<double> g1 = gan_gen_grads(controlled, disc, noise, false);
        const std::vector<double> g2 = gan_gen_grads(manual, disc, noise, false);
        for (std::size_t p = 0; p < controlled.param_count(); ++p) {
            controlled.params()[p] += ctrl_step(sgd, states[p], g1[p]);
            manual.params()[p] -= rate * g2[p];
        }
    }
    CHECK(controlled.params() == manual.params());
}

TEST_CASE("identity-initialized cycle starts with zero reconstruction error") {
    Samples pairs;
    for (int i = 0; i < 64; ++i) {
        const double v = -1.0 + 2.0 * static_cast<double>(i) / 63.0;
        pairs.a.push_back(v);
        pairs.b.push_back(v);
    }
    CycleSpecs specs;
    specs.ga = tiny_net({1, 2, 1}, OutputActivation::Identity);
    specs.ga.activation = Activation::Relu;
    specs.gb = specs.ga;
    specs.da = tiny_net({1, 4, 1}, OutputActivation::Sigmoid);
    specs.db = specs.da;

    CycleInit init;
    init.ga = identity_relu().params();
    init.gb = identity_relu().params();
    init.da = Mlp(specs.da, 1).params();
    init.db = Mlp(specs.db, 2).params();

    TrainConfig cfg = quick_config(2, 16, 1e-4, 3);
    cfg.lambda_cyc = 1.0;
    const TrainReport report = train_cyclegan_toy(pairs, specs, cfg, init);
    REQUIRE(report.cycle_error.size() == 2);
    CHECK(report.cycle_error[0] == 0.0);
}

TEST_CASE("raising the cycle weight does not raise the final cycle error") {
    Samples pairs;
    for (int i = 0; i < 128; ++i) {
        const double v = -1.0 + 2.0 * static_cast<double>(i) / 127.0;
        pairs.a.push_back(v);
        pairs.b.push_back(v);
    }
    CycleSpecs specs;
    specs.ga = tiny_net({1, 6, 1}, OutputActivation::Identity);
    specs.gb = specs.ga;
    specs.da = tiny_net({1, 6, 1}, OutputActivation::Sigmoid);
    specs.db = specs.da;

    double previous = 1e30;
    for (double lambda : {0.1, 1.0, 10.0}) {
        TrainConfig cfg = quick_config(30, 16, 2e-3, 8);
        cfg.lambda_cyc = lambda;
        const TrainReport report = train_cyclegan_toy(pairs, specs, cfg);
        REQUIRE_FALSE(report.diverged);
        const double final_error = report.cycle_error.back();
        CHECK(final_error <= previous + 1e-12);
        previous = final_error;
    }
}

TEST_CASE("consistency score extremes") {
    TrainReport report;
    for (int i = 0; i < 32; ++i) {
        report.theta_norm.push_back(std::sin(0.3 * i) + 2.0);
        report.gen_loss.push_back(0.0);
        report.disc_loss.push_back(0.0);
        report.mean_error.push_back(0.0);
        report.std_error.push_back(0.0);
    }
    optctl::sim::Trace trace;
    trace.names = {"y"};
    trace.signals = {report.theta_norm};
    for (std::size_t i = 0; i < report.theta_norm.size(); ++i) {
        trace.times.push_back(static_cast<double>(i));
    }
    CHECK(consistency_score(report, trace, "y") == doctest::Approx(1.0).epsilon(1e-12));

    optctl::sim::Trace flat;
    flat.names = {"y"};
    flat.signals = {std::vector<double>(32, 3.0)};
    flat.times = trace.times;
    CHECK(consistency_score(report, flat, "y") == 0.0);

    optctl::sim::Trace small;
    small.names = {"y"};
    small.signals = {{1.0, 2.0}};
    small.times = {0.0, 1.0};
    CHECK_THROWS_AS(consistency_score(report, small, "y"), optctl::InsufficientDataError);
}

TEST_CASE("config validation rejects bad training parameters") {
    TrainConfig cfg = quick_config(1, 0, 1e-3, 0);
    CHECK_THROWS_AS(cfg.validate(), optctl::InvalidConfigError);
    cfg = quick_config(1, 8, -1.0, 0);
    CHECK_THROWS_AS(cfg.validate(), optctl::InvalidConfigError);
    cfg = quick_config(-1, 8, 1e-3, 0);
    CHECK_THROWS_AS(cfg.validate(), optctl::InvalidConfigError);
}

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optctl/controllers.hpp"
#include "optctl/sim.hpp"

namespace optctl::toy {

enum class Activation { Tanh, Relu };
enum class OutputActivation { Identity, Sigmoid };

struct MLPSpec {
    std::vector<int> layer_widths{1, 16, 16, 1};
    Activation activation = Activation::Tanh;
    OutputActivation output_activation = OutputActivation::Identity;

    void validate() const;
};

// Small dense network with hand-rolled backprop. Parameters are stored flat
// (per layer: row-major weights, then biases) and initialized from a linear
// congruential stream keyed by the seed, so runs replay exactly.
class Mlp {
  public:
    Mlp(MLPSpec spec, std::uint64_t seed);

    const MLPSpec& spec() const { return spec_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::size_t param_count() const { return params_.size(); }

    double forward(double x) const;

    // Forward pass that records activations for the backward pass. When the
    // output activation is Sigmoid, `logit` is the final pre-activation.
    struct Tape {
        std::vector<std::vector<double>> inputs;  // per-layer inputs
        std::vector<std::vector<double>> pre;     // per-layer pre-activations
        double output = 0.0;
        double logit = 0.0;
    };
    double forward(double x, Tape& tape) const;

    // Accumulates dL/dparams into grads (same layout as params) and returns
    // dL/dx. `upstream` is dL/d(pre-activation of the output) — for Sigmoid
    // outputs that is the logit derivative, for Identity the plain one.
    double backward(const Tape& tape, double upstream, std::vector<double>& grads) const;

    bool finite() const;

  private:
    MLPSpec spec_;
    std::vector<double> params_;
    std::vector<int> weight_offsets_;
    std::vector<int> bias_offsets_;
};

struct TrainConfig {
    int epochs = 200;
    int batch_size = 200;
    double lr = 2e-4;  // copied over optimizer.r at training start
    ctrl::ControllerConfig optimizer = ctrl::ControllerConfig::adam();
    double lambda_cyc = 10.0;
    std::uint64_t seed = 0;
    // The adversarial generator term defaults to the non-saturating form
    // -log D(G(z)); this switches to the printed log(1 + D(G(z))) variant.
    bool literal_adversarial = false;
    int eval_samples = 512;

    void validate() const;
};

struct Dataset1D {
    enum class Kind { GaussianMixture, FunctionPair };
    Kind kind = Kind::GaussianMixture;
    // Mixture parameters; weights must sum to 1.
    std::vector<double> means{-2.0, 2.0};
    std::vector<double> stds{0.5, 0.5};
    std::vector<double> weights{0.5, 0.5};
    // Strictly increasing grid for the paired-function dataset, which yields
    // (sin x, cos x) pairs.
    std::vector<double> grid;

    void validate() const;
};

// `b` is empty for mixture datasets.
struct Samples {
    std::vector<double> a;
    std::vector<double> b;
};

Samples make_dataset(const Dataset1D& spec, int n, std::uint64_t seed);

// Per-epoch diagnostics. theta_norm, mean/std error and cycle_error are
// snapshots taken at the start of each epoch (entry 0 is the untrained
// network); the loss entries are averages over that epoch's steps.
struct TrainReport {
    std::vector<double> gen_loss;
    std::vector<double> disc_loss;
    std::vector<double> theta_norm;
    std::vector<double> mean_error;
    std::vector<double> std_error;
    std::vector<double> cycle_error;  // adversarial pair training only
    bool diverged = false;
};

// One-batch gradient computations, exposed so tests can replay the exact
// update arithmetic. Gradients come back in parameter layout; loss_out
// receives the batch objective value.

std::vector<double> gan_disc_grads(const Mlp& gen, const Mlp& disc, std::span<const double> real,
                                   std::span<const double> noise, double* loss_out = nullptr);

std::vector<double> gan_gen_grads(const Mlp& gen, const Mlp& disc, std::span<const double> noise,
                                  bool literal_adversarial, double* loss_out = nullptr);

struct CycleNets {
    Mlp ga;  // A -> B
    Mlp gb;  // B -> A
    Mlp da;  // discriminates domain A
    Mlp db;  // discriminates domain B
};

struct CycleDiscGrads {
    std::vector<double> da;
    std::vector<double> db;
    double loss = 0.0;
};
CycleDiscGrads cycle_disc_grads(const CycleNets& nets, std::span<const double> batch_a,
                                std::span<const double> batch_b);

struct CycleGenGrads {
    std::vector<double> ga;
    std::vector<double> gb;
    double loss = 0.0;
    double cycle_term = 0.0;  // unweighted L1 cycle penalty
};
CycleGenGrads cycle_gen_grads(const CycleNets& nets, std::span<const double> batch_a,
                              std::span<const double> batch_b, double lambda_cyc,
                              bool literal_adversarial);

// Alternating discriminator/generator training on 1-D data. Every scalar
// parameter carries its own optimizer state. Divergence sets the report flag
// and returns the partial report instead of aborting.
TrainReport train_gan_toy(std::span<const double> data, const MLPSpec& gen_spec,
                          const MLPSpec& disc_spec, const TrainConfig& cfg);

struct CycleSpecs {
    MLPSpec ga;
    MLPSpec gb;
    MLPSpec da;
    MLPSpec db;
};

// Optional explicit initial parameters (layout must match each spec).
struct CycleInit {
    std::vector<double> ga;
    std::vector<double> gb;
    std::vector<double> da;
    std::vector<double> db;
};

TrainReport train_cyclegan_toy(const Samples& pairs, const CycleSpecs& specs,
                               const TrainConfig& cfg,
                               const std::optional<CycleInit>& init = std::nullopt);

// Pearson correlation between the normalized envelopes of the report's
// weight-norm trajectory and the trace signal resampled to epoch count.
// Degenerate variance on either side yields 0 by convention.
double consistency_score(const TrainReport& report, const sim::Trace& trace,
                         const std::string& signal);

}  // namespace optctl::toy

#pragma once

#include "aric/data.hpp"
#include "aric/mlp.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace aric {

/// Hyperparameters of the two-phase training loop.
struct TrainConfig {
  std::size_t batch_size = 64;       // m, per class
  std::size_t pretrain_iters = 1000;
  std::size_t train_iters = 1000;
  double eta_d = 0.1;
  double eta_g = 0.1;
  std::optional<double> gamma;       // weight of the re-weighted negative term; unset means 1/m
  double lambda = 0.1;               // entropy weight, nats
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // 0 disables the checkpoint callback

  double effective_gamma() const;
  void validate() const;
};

/// Logistic-style classifier. `params` produces the logit; D(x) = sigmoid(logit).
struct Discriminator {
  MlpParams params;

  Vector logits(const Matrix& x) const;
};

/// Sample weighter. `params` produces a pre-activation z; the raw weight is softplus(z) > 0.
struct Generator {
  MlpParams params;

  Vector pre_activations(const Matrix& x) const;
  Vector raw_weights(const Matrix& x) const;
};

/// A probability distribution over the negatives of one mini-batch.
struct BatchWeights {
  Vector weights;

  double entropy() const;
  double max() const { return weights.maxCoeff(); }
  double min() const { return weights.minCoeff(); }
};

/// raw / sum(raw). Throws TrainingError when any raw weight is not strictly positive.
BatchWeights normalize_weights(const Vector& raw, std::size_t iteration = 0);
BatchWeights generator_batch_weights(const Generator& gen, const Matrix& negatives);

/// Objective value and its gradient w.r.t. the discriminator logits of each half of the batch.
struct LogitObjective {
  double value = 0.0;
  Vector d_pos;
  Vector d_neg;
};

/// (1/m+) sum log D(x+) + (1/m-) sum log(1 - D(x-)).
LogitObjective pretrain_objective(const Vector& pos_logits, const Vector& neg_logits);

/// (1/m+) sum log D(x+) + gamma * sum_i c_i log(1 - D(x-_i)), where c_i = m- * w_i are the
/// batch weights rescaled to mean one. With uniform weights and gamma = 1/m this is the
/// pretraining objective.
LogitObjective adversarial_objective(const Vector& pos_logits, const Vector& neg_logits, const BatchWeights& weights,
                                     double gamma);

struct GeneratorObjective {
  double value = 0.0;
  Vector d_pre;  // gradient w.r.t. generator pre-activations, through softplus and normalization
  BatchWeights weights;
};

/// sum_i w_i log(1 - D(x_i)) + lambda * sum_i w_i log w_i with w = normalize(softplus(pre)).
/// Discriminator logits are constants here.
GeneratorObjective generator_objective(const Vector& gen_pre, const Vector& neg_logits, double lambda,
                                       std::size_t iteration = 0);

/// Uniform-with-replacement mini-batches of m positives and m negatives.
class BatchSampler {
 public:
  BatchSampler(const LabeledDataset& data, std::size_t batch_size, std::uint64_t seed);

  struct Batch {
    Matrix positives;
    Matrix negatives;
  };

  Batch next();

 private:
  const LabeledDataset* data_;
  std::vector<std::size_t> pos_;
  std::vector<std::size_t> neg_;
  std::size_t m_;
  std::mt19937_64 rng_;
};

struct AdversarialRecord {
  double d_loss = 0.0;  // negated discriminator objective
  double g_loss = 0.0;
  double weight_entropy = 0.0;
  double max_weight = 0.0;
  double min_weight = 0.0;
};

struct TrainTrace {
  std::vector<double> pretrain_d_loss;  // negated pretraining objective per iteration
  std::vector<AdversarialRecord> adversarial;
};

/// One ascent step on the pretraining objective; returns the negated objective before the step.
double pretrain_step(Discriminator& disc, const Matrix& positives, const Matrix& negatives, double eta,
                     std::size_t iteration = 0);

/// One ascent step of eta_d on the adversarial objective with generator weights held fixed.
/// Returns the negated objective before the step.
double discriminator_step(const TrainConfig& config, Discriminator& disc, const Generator& gen,
                          const Matrix& positives, const Matrix& negatives, std::size_t iteration = 0);

struct GeneratorStep {
  double g_loss = 0.0;
  BatchWeights weights;  // weights before the update
};

/// One descent step of eta_g on the generator objective with the discriminator held fixed.
GeneratorStep generator_step(const TrainConfig& config, const Discriminator& disc, Generator& gen,
                             const Matrix& negatives, std::size_t iteration = 0);

struct PretrainResult {
  Discriminator disc;
  TrainTrace trace;
};

PretrainResult pretrain_discriminator(const TrainConfig& config, const LabeledDataset& data, Discriminator disc);
/// Same, drawing batches from an existing sampler so a longer run can continue its stream.
PretrainResult pretrain_discriminator(const TrainConfig& config, BatchSampler& sampler, Discriminator disc);

struct TrainResult {
  Discriminator disc;
  Generator gen;
  TrainTrace trace;
};

using CheckpointFn = std::function<void(std::size_t iteration, const Discriminator&, const Generator&)>;

/// Pretraining followed by alternating discriminator/generator steps. Parameters are
/// initialized and batches drawn from streams derived from config.seed.
TrainResult train(const TrainConfig& config, const LabeledDataset& data, const std::vector<LayerSpec>& disc_arch,
                  const std::vector<LayerSpec>& gen_arch, const CheckpointFn& on_checkpoint = {});

/// Logistic regression: one identity unit whose output is the logit.
std::vector<LayerSpec> logistic_architecture(std::size_t input_dim);
/// 64-32-32 relu hidden layers, one output unit.
std::vector<LayerSpec> shallow_generator_architecture(std::size_t input_dim);
/// 10-8-8-6-6-6 relu hidden layers, one output unit.
std::vector<LayerSpec> deep_generator_architecture(std::size_t input_dim);

Discriminator init_discriminator(const std::vector<LayerSpec>& arch, std::mt19937_64& rng);
Generator init_generator(const std::vector<LayerSpec>& arch, std::mt19937_64& rng);

/// Independent, reproducible stream for a given purpose.
std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream);

Vector predict_proba(const Discriminator& disc, const Matrix& x);
double predict(const Discriminator& disc, const Vector& x);
/// 1 iff probability >= 0.5 (a tie goes to the positive class).
int classify(double probability);
int classify(const Discriminator& disc, const Vector& x);

}  // namespace aric

#include "aric/adversarial.hpp"

#include "aric/errors.hpp"

#include <cmath>
#include <string>

namespace aric {

namespace {

Vector first_column(const Matrix& m) { return m.col(0); }

Matrix as_column(const Vector& v) {
  Matrix m(v.size(), 1);
  m.col(0) = v;
  return m;
}

void require_finite(double value, const char* what, std::size_t iteration) {
  if (!std::isfinite(value)) {
    throw TrainingError(std::string("non-finite ") + what, iteration);
  }
}

void require_single_output(const std::vector<LayerSpec>& arch, const char* who) {
  validate_architecture(arch);
  if (arch.back().output_dim != 1 || arch.back().activation != Activation::identity) {
    throw ConfigError(std::string(who) + " must end in a single identity unit");
  }
}

}  // namespace

double TrainConfig::effective_gamma() const {
  return gamma.value_or(1.0 / static_cast<double>(batch_size));
}

void TrainConfig::validate() const {
  if (batch_size < 1) {
    throw ConfigError("batch size must be at least 1");
  }
  if (!(eta_d > 0.0) || !(eta_g > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (!(effective_gamma() >= 0.0)) {
    throw ConfigError("gamma must be non-negative");
  }
  if (!(lambda >= 0.0)) {
    throw ConfigError("lambda must be non-negative");
  }
}

Vector Discriminator::logits(const Matrix& x) const { return first_column(forward(params, x).back()); }

Vector Generator::pre_activations(const Matrix& x) const { return first_column(forward(params, x).back()); }

Vector Generator::raw_weights(const Matrix& x) const {
  return pre_activations(x).unaryExpr([](double z) { return softplus(z); });
}

double BatchWeights::entropy() const {
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

BatchWeights normalize_weights(const Vector& raw, std::size_t iteration) {
  if (raw.size() == 0) {
    throw ConfigError("cannot normalize weights of an empty batch");
  }
  if (!raw.allFinite() || raw.minCoeff() <= 0.0) {
    throw TrainingError("degenerate generator: raw weights must be finite and strictly positive", iteration);
  }
  return BatchWeights{raw / raw.sum()};
}

BatchWeights generator_batch_weights(const Generator& gen, const Matrix& negatives) {
  if (negatives.rows() == 0) {
    throw ConfigError("generator_batch_weights: empty batch");
  }
  return normalize_weights(gen.raw_weights(negatives));
}

LogitObjective pretrain_objective(const Vector& pos_logits, const Vector& neg_logits) {
  const double inv_pos = 1.0 / static_cast<double>(pos_logits.size());
  const double inv_neg = 1.0 / static_cast<double>(neg_logits.size());
  LogitObjective out;
  out.d_pos.resize(pos_logits.size());
  out.d_neg.resize(neg_logits.size());
  for (Eigen::Index i = 0; i < pos_logits.size(); ++i) {
    const double z = pos_logits[i];
    out.value += inv_pos * stable_log_sigmoid(z);
    out.d_pos[i] = inv_pos * sigmoid(-z);  // d/dz log sigmoid(z) = 1 - sigmoid(z)
  }
  for (Eigen::Index i = 0; i < neg_logits.size(); ++i) {
    const double z = neg_logits[i];
    out.value += inv_neg * stable_log_one_minus_sigmoid(z);
    out.d_neg[i] = -inv_neg * sigmoid(z);
  }
  return out;
}

LogitObjective adversarial_objective(const Vector& pos_logits, const Vector& neg_logits, const BatchWeights& weights,
                                     double gamma) {
  if (weights.weights.size() != neg_logits.size()) {
    throw std::logic_error("adversarial_objective: weight count does not match negatives");
  }
  const double inv_pos = 1.0 / static_cast<double>(pos_logits.size());
  const double m_neg = static_cast<double>(neg_logits.size());
  LogitObjective out;
  out.d_pos.resize(pos_logits.size());
  out.d_neg.resize(neg_logits.size());
  for (Eigen::Index i = 0; i < pos_logits.size(); ++i) {
    const double z = pos_logits[i];
    out.value += inv_pos * stable_log_sigmoid(z);
    out.d_pos[i] = inv_pos * sigmoid(-z);
  }
  for (Eigen::Index i = 0; i < neg_logits.size(); ++i) {
    const double z = neg_logits[i];
    const double c = gamma * m_neg * weights.weights[i];
    out.value += c * stable_log_one_minus_sigmoid(z);
    out.d_neg[i] = -c * sigmoid(z);
  }
  return out;
}

GeneratorObjective generator_objective(const Vector& gen_pre, const Vector& neg_logits, double lambda,
                                       std::size_t iteration) {
  if (gen_pre.size() != neg_logits.size()) {
    throw std::logic_error("generator_objective: size mismatch");
  }
  const Eigen::Index m = gen_pre.size();
  const Vector raw = gen_pre.unaryExpr([](double z) { return softplus(z); });
  GeneratorObjective out;
  out.weights = normalize_weights(raw, iteration);
  const Vector& w = out.weights.weights;
  const double total = raw.sum();
  const double log_total = std::log(total);

  // d value / d w_i
  Vector g(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double log_one_minus_d = stable_log_one_minus_sigmoid(neg_logits[i]);
    const double log_w = std::log(raw[i]) - log_total;
    out.value += w[i] * log_one_minus_d + lambda * w[i] * log_w;
    g[i] = log_one_minus_d + lambda * (log_w + 1.0);
  }
  // Through w = raw / sum(raw): d/d raw_i = (g_i - <w, g>) / sum(raw); softplus' = sigmoid.
  const double mean_g = w.dot(g);
  out.d_pre.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    out.d_pre[i] = (g[i] - mean_g) / total * sigmoid(gen_pre[i]);
  }
  return out;
}

BatchSampler::BatchSampler(const LabeledDataset& data, std::size_t batch_size, std::uint64_t seed)
    : data_(&data),
      pos_(data.positive_indices()),
      neg_(data.negative_indices()),
      m_(batch_size),
      rng_(derive_rng(seed, 1)) {
  if (pos_.empty() || neg_.empty()) {
    throw DataError("training needs at least one positive and one negative sample");
  }
  if (m_ < 1) {
    throw ConfigError("batch size must be at least 1");
  }
}

BatchSampler::Batch BatchSampler::next() {
  std::uniform_int_distribution<std::size_t> pick_pos(0, pos_.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_neg(0, neg_.size() - 1);
  std::vector<std::size_t> p(m_), n(m_);
  for (auto& i : p) i = pos_[pick_pos(rng_)];
  for (auto& i : n) i = neg_[pick_neg(rng_)];
  return {gather_rows(data_->features, p), gather_rows(data_->features, n)};
}

namespace {

double ascend(Discriminator& disc, const Matrix& positives, const Matrix& negatives, double eta,
              std::size_t iteration, const std::function<LogitObjective(const Vector&, const Vector&)>& objective) {
  const Eigen::Index mp = positives.rows();
  const Activations acts = forward(disc.params, vstack(positives, negatives));
  const Vector logits = first_column(acts.back());
  const LogitObjective obj = objective(logits.head(mp), logits.tail(logits.size() - mp));
  require_finite(obj.value, "discriminator objective", iteration);
  Vector d(logits.size());
  d << obj.d_pos, obj.d_neg;
  const BackwardResult br = backward(disc.params, acts, as_column(d));
  disc.params = sgd_step(std::move(disc.params), br.grads, eta, Direction::ascent, iteration);
  return -obj.value;
}

}  // namespace

double pretrain_step(Discriminator& disc, const Matrix& positives, const Matrix& negatives, double eta,
                     std::size_t iteration) {
  return ascend(disc, positives, negatives, eta, iteration, pretrain_objective);
}

double discriminator_step(const TrainConfig& config, Discriminator& disc, const Generator& gen,
                          const Matrix& positives, const Matrix& negatives, std::size_t iteration) {
  const BatchWeights weights = normalize_weights(gen.raw_weights(negatives), iteration);
  const double gamma = config.effective_gamma();
  return ascend(disc, positives, negatives, config.eta_d, iteration, [&](const Vector& p, const Vector& n) {
    return adversarial_objective(p, n, weights, gamma);
  });
}

GeneratorStep generator_step(const TrainConfig& config, const Discriminator& disc, Generator& gen,
                             const Matrix& negatives, std::size_t iteration) {
  const Vector neg_logits = disc.logits(negatives);
  const Activations acts = forward(gen.params, negatives);
  const GeneratorObjective obj = generator_objective(first_column(acts.back()), neg_logits, config.lambda, iteration);
  require_finite(obj.value, "generator objective", iteration);
  const BackwardResult br = backward(gen.params, acts, as_column(obj.d_pre));
  gen.params = sgd_step(std::move(gen.params), br.grads, config.eta_g, Direction::descent, iteration);
  return {obj.value, obj.weights};
}

PretrainResult pretrain_discriminator(const TrainConfig& config, BatchSampler& sampler, Discriminator disc) {
  config.validate();
  PretrainResult out{std::move(disc), {}};
  out.trace.pretrain_d_loss.reserve(config.pretrain_iters);
  for (std::size_t it = 0; it < config.pretrain_iters; ++it) {
    const auto batch = sampler.next();
    out.trace.pretrain_d_loss.push_back(pretrain_step(out.disc, batch.positives, batch.negatives, config.eta_d, it));
  }
  return out;
}

PretrainResult pretrain_discriminator(const TrainConfig& config, const LabeledDataset& data, Discriminator disc) {
  BatchSampler sampler(data, config.batch_size, config.seed);
  return pretrain_discriminator(config, sampler, std::move(disc));
}

TrainResult train(const TrainConfig& config, const LabeledDataset& data, const std::vector<LayerSpec>& disc_arch,
                  const std::vector<LayerSpec>& gen_arch, const CheckpointFn& on_checkpoint) {
  config.validate();
  data.validate();
  if (disc_arch.front().input_dim != data.dim() || gen_arch.front().input_dim != data.dim()) {
    throw ConfigError("network input dims must equal the dataset dimension " + std::to_string(data.dim()));
  }
  auto init_rng = derive_rng(config.seed, 0);
  Discriminator disc = init_discriminator(disc_arch, init_rng);
  Generator gen = init_generator(gen_arch, init_rng);

  BatchSampler sampler(data, config.batch_size, config.seed);
  const auto checkpoint = [&](std::size_t done) {
    if (on_checkpoint && config.checkpoint_every > 0 && done % config.checkpoint_every == 0) {
      on_checkpoint(done, disc, gen);
    }
  };

  PretrainResult pre = pretrain_discriminator(config, sampler, std::move(disc));
  disc = std::move(pre.disc);
  TrainTrace trace = std::move(pre.trace);
  if (config.pretrain_iters > 0) {
    checkpoint(config.pretrain_iters);
  }

  trace.adversarial.reserve(config.train_iters);
  for (std::size_t t = 0; t < config.train_iters; ++t) {
    const std::size_t it = config.pretrain_iters + t;
    const auto batch = sampler.next();
    AdversarialRecord rec;
    rec.d_loss = discriminator_step(config, disc, gen, batch.positives, batch.negatives, it);
    const GeneratorStep gs = generator_step(config, disc, gen, batch.negatives, it);
    rec.g_loss = gs.g_loss;
    rec.weight_entropy = gs.weights.entropy();
    rec.max_weight = gs.weights.max();
    rec.min_weight = gs.weights.min();
    trace.adversarial.push_back(rec);
    checkpoint(it + 1);
  }
  return {std::move(disc), std::move(gen), std::move(trace)};
}

std::vector<LayerSpec> logistic_architecture(std::size_t input_dim) {
  return make_architecture(input_dim, {}, Activation::identity, 1, Activation::identity);
}

std::vector<LayerSpec> shallow_generator_architecture(std::size_t input_dim) {
  return make_architecture(input_dim, {64, 32, 32}, Activation::relu, 1, Activation::identity);
}

std::vector<LayerSpec> deep_generator_architecture(std::size_t input_dim) {
  return make_architecture(input_dim, {10, 8, 8, 6, 6, 6}, Activation::relu, 1, Activation::identity);
}

Discriminator init_discriminator(const std::vector<LayerSpec>& arch, std::mt19937_64& rng) {
  require_single_output(arch, "discriminator");
  return Discriminator{init_mlp(arch, rng)};
}

Generator init_generator(const std::vector<LayerSpec>& arch, std::mt19937_64& rng) {
  require_single_output(arch, "generator");
  return Generator{init_mlp(arch, rng)};
}

std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

Vector predict_proba(const Discriminator& disc, const Matrix& x) {
  return disc.logits(x).unaryExpr([](double z) { return sigmoid(z); });
}

double predict(const Discriminator& disc, const Vector& x) {
  const Matrix row = x.transpose();
  return sigmoid(disc.logits(row)[0]);
}

int classify(double probability) { return probability >= 0.5 ? 1 : 0; }

int classify(const Discriminator& disc, const Vector& x) { return classify(predict(disc, x)); }

}  // namespace aric

#include "aric/baselines.hpp"

#include "aric/errors.hpp"

#include <algorithm>

namespace aric {

Discriminator train_pretrain_only(const TrainConfig& config, const LabeledDataset& data,
                                  const std::vector<LayerSpec>& disc_arch) {
  auto init_rng = derive_rng(config.seed, 0);
  Discriminator disc = init_discriminator(disc_arch, init_rng);
  TrainConfig extended = config;
  extended.pretrain_iters = config.pretrain_iters + config.train_iters;
  extended.train_iters = 0;
  return pretrain_discriminator(extended, data, std::move(disc)).disc;
}

LabeledDataset resample(const LabeledDataset& data, Resampling mode, std::uint64_t seed) {
  auto rng = derive_rng(seed, 3);
  std::vector<std::size_t> pos = data.positive_indices();
  std::vector<std::size_t> neg = data.negative_indices();
  if (pos.empty() || neg.empty()) {
    throw DataError("resampling needs both classes");
  }
  std::vector<std::size_t> keep;
  if (mode == Resampling::undersample) {
    std::shuffle(neg.begin(), neg.end(), rng);
    neg.resize(std::min(neg.size(), pos.size()));
    keep = pos;
    keep.insert(keep.end(), neg.begin(), neg.end());
  } else {
    keep = neg;
    keep.insert(keep.end(), pos.begin(), pos.end());
    std::uniform_int_distribution<std::size_t> pick(0, pos.size() - 1);
    for (std::size_t k = pos.size(); k < neg.size(); ++k) {
      keep.push_back(pos[pick(rng)]);
    }
  }
  std::sort(keep.begin(), keep.end());
  return data.subset(keep);
}

Discriminator train_on_pool(const TrainConfig& config, const LabeledDataset& pool,
                            const std::vector<LayerSpec>& disc_arch) {
  config.validate();
  pool.validate();
  if (pool.size() == 0) {
    throw DataError("empty training pool");
  }
  auto init_rng = derive_rng(config.seed, 0);
  Discriminator disc = init_discriminator(disc_arch, init_rng);
  auto rng = derive_rng(config.seed, 1);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const std::size_t batch = 2 * config.batch_size;
  const std::size_t iters = config.pretrain_iters + config.train_iters;
  std::vector<std::size_t> idx(batch);
  for (std::size_t it = 0; it < iters; ++it) {
    for (auto& i : idx) i = pick(rng);
    const Matrix x = gather_rows(pool.features, idx);
    const Activations acts = forward(disc.params, x);
    Matrix grad(static_cast<Eigen::Index>(batch), 1);
    for (std::size_t k = 0; k < batch; ++k) {
      const double p = sigmoid(acts.back()(static_cast<Eigen::Index>(k), 0));
      // d/dz of y log p + (1 - y) log(1 - p), averaged over the batch
      grad(static_cast<Eigen::Index>(k), 0) = (pool.labels[idx[k]] - p) / static_cast<double>(batch);
    }
    disc.params = sgd_step(std::move(disc.params), backward(disc.params, acts, grad).grads, config.eta_d,
                           Direction::ascent, it);
  }
  return disc;
}

}  // namespace aric

#pragma once

#include "aric/adversarial.hpp"

namespace aric {

// Reference points for the adversarial classifier; none of these uses a generator.

/// The pretraining loop extended to pretrain_iters + train_iters iterations, with the same
/// initialization and batch streams as train().
Discriminator train_pretrain_only(const TrainConfig& config, const LabeledDataset& data,
                                  const std::vector<LayerSpec>& disc_arch);

enum class Resampling { undersample, oversample };

/// Undersample: all positives plus |S+| negatives drawn without replacement.
/// Oversample: all negatives plus positives drawn with replacement up to |S-|.
LabeledDataset resample(const LabeledDataset& data, Resampling mode, std::uint64_t seed);

/// Plain mini-batch logistic loss on `pool` (batches of 2m rows drawn uniformly with
/// replacement), pretrain_iters + train_iters ascent steps of eta_d.
Discriminator train_on_pool(const TrainConfig& config, const LabeledDataset& pool,
                            const std::vector<LayerSpec>& disc_arch);

}  // namespace aric

#pragma once

#include "aric/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace aric {

/// Binary dataset. Label 1 is the positive (minority) class, 0 the negative (majority) class.
struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  std::vector<std::size_t> positive_indices() const;
  std::vector<std::size_t> negative_indices() const;
  std::size_t positive_count() const;
  std::size_t negative_count() const;

  LabeledDataset subset(const std::vector<std::size_t>& indices) const;
  void validate() const;
};

/// Parses a headered, comma-separated file (no quoting). Rows whose label cell equals
/// `positive_label_token` become label 1, every other row label 0. A dataset containing
/// only one class is returned with a warning written to `warnings`.
LabeledDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                        const std::string& positive_label_token, std::ostream* warnings = nullptr);
LabeledDataset parse_csv(std::istream& in, const std::string& label_column, const std::string& positive_label_token,
                         std::ostream* warnings = nullptr);

/// Writes features followed by a `label` column holding 1/0; values use shortest round-trip form.
void write_csv(const LabeledDataset& data, const std::filesystem::path& path);
void write_csv(const LabeledDataset& data, std::ostream& out);

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 0;
  bool stratified = true;

  void validate() const;
};

struct DataSplits {
  LabeledDataset train;
  LabeledDataset val;
  LabeledDataset test;
  // Row indices into the source dataset, kept for disjointness checks.
  std::vector<std::size_t> train_idx, val_idx, test_idx;
};

/// Disjoint, exhaustive partition. Per class (or globally when not stratified) the first
/// round(train_frac * n) shuffled rows go to train, the next round(val_frac * n) to val,
/// the rest to test.
DataSplits split(const LabeledDataset& data, const SplitSpec& spec);

/// Column-wise affine transform fitted on training features.
struct Standardizer {
  Vector mean;
  Vector stddev;  // population std, floored at 1e-12

  static Standardizer fit(const Matrix& train);
  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& z) const;
  LabeledDataset apply(const LabeledDataset& data) const;
};

/// Fits on `splits.train` and applies the same transform to all three parts.
Standardizer standardize(DataSplits& splits);

struct SynthSpec {
  std::size_t n_total = 1000;
  double imbalance_ratio = 10.0;
  std::size_t dim = 2;
  double class_separation = 2.0;
  std::uint64_t seed = 0;

  std::size_t minority_count() const;
  std::size_t majority_count() const { return n_total - minority_count(); }
  void validate() const;
};

/// Minority ~ N(+mu, I), majority ~ N(-mu, I), with mu along the all-ones diagonal and
/// ||2 mu|| = class_separation. Rows are shuffled.
LabeledDataset synth_gaussian_imbalanced(const SynthSpec& spec);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace aric

#include "aric/data.hpp"

#include "aric/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace aric {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) {
    return false;
  }
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') {
    ++first;
  }
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::vector<std::size_t> shuffled(std::vector<std::size_t> idx, std::mt19937_64& rng) {
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

std::size_t round_count(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
}

}  // namespace

std::vector<std::size_t> LabeledDataset::positive_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::negative_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) out.push_back(i);
  }
  return out;
}

std::size_t LabeledDataset::positive_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

std::size_t LabeledDataset::negative_count() const { return labels.size() - positive_count(); }

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
  LabeledDataset out;
  out.features = gather_rows(features, indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.labels.push_back(labels[i]);
  }
  out.feature_names = feature_names;
  return out;
}

void LabeledDataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DataError("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                    std::to_string(labels.size()) + " labels");
  }
  for (int l : labels) {
    if (l != 0 && l != 1) {
      throw DataError("labels must be 0 or 1");
    }
  }
  if (!features.allFinite()) {
    throw DataError("dataset contains non-finite features");
  }
}

LabeledDataset parse_csv(std::istream& in, const std::string& label_column, const std::string& positive_label_token,
                         std::ostream* warnings) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("csv: missing header row");
  }
  const auto header = split_commas(line);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw DataError("csv: label column '" + label_column + "' not found in header");
  }
  const auto label_pos = static_cast<std::size_t>(label_it - header.begin());

  LabeledDataset data;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_pos) data.feature_names.push_back(header[c]);
  }
  const std::size_t d = data.feature_names.size();

  std::vector<double> values;
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw DataError("csv: row " + std::to_string(row + 1) + " (line " + std::to_string(line_no) + ") has " +
                      std::to_string(cells.size()) + " cells, header has " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_pos) {
        continue;
      }
      double v = 0.0;
      if (!parse_double(cells[c], v)) {
        throw DataError("csv: non-numeric value '" + cells[c] + "' at row " + std::to_string(row + 1) + ", column '" +
                        header[c] + "'");
      }
      values.push_back(v);
    }
    data.labels.push_back(cells[label_pos] == positive_label_token ? 1 : 0);
    ++row;
  }
  if (row == 0) {
    throw DataError("csv: no data rows");
  }
  data.features.resize(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(d));
  std::copy(values.begin(), values.end(), data.features.data());

  const std::size_t pos = data.positive_count();
  if (warnings != nullptr && (pos == 0 || pos == row)) {
    *warnings << "warning: dataset contains a single class (" << (pos == 0 ? "no" : "only") << " rows labelled '"
              << positive_label_token << "'); usable for evaluation only\n";
  }
  return data;
}

LabeledDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                        const std::string& positive_label_token, std::ostream* warnings) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open csv file '" + path.string() + "'");
  }
  return parse_csv(in, label_column, positive_label_token, warnings);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) {
    throw std::logic_error("format_double failed");
  }
  return std::string(buf, ptr);
}

void write_csv(const LabeledDataset& data, std::ostream& out) {
  const std::size_t d = data.dim();
  for (std::size_t c = 0; c < d; ++c) {
    out << (c < data.feature_names.size() ? data.feature_names[c] : "x" + std::to_string(c)) << ',';
  }
  out << "label\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      out << format_double(data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))) << ',';
    }
    out << data.labels[r] << '\n';
  }
}

void write_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write csv file '" + path.string() + "'");
  }
  write_csv(data, out);
  if (!out) {
    throw DataError("write failed for '" + path.string() + "'");
  }
}

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac}) {
    if (!(f > 0.0 && f < 1.0)) {
      throw ConfigError("split fractions must lie in (0, 1)");
    }
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-12) {
    throw ConfigError("split fractions must sum to 1");
  }
}

DataSplits split(const LabeledDataset& data, const SplitSpec& spec) {
  spec.validate();
  data.validate();
  std::mt19937_64 rng(spec.seed);
  DataSplits out;

  auto assign = [&](const std::vector<std::size_t>& group) {
    const std::size_t n = group.size();
    const std::size_t n_train = std::min(n, round_count(spec.train_frac, n));
    const std::size_t n_val = std::min(n - n_train, round_count(spec.val_frac, n));
    for (std::size_t i = 0; i < n; ++i) {
      auto& dst = i < n_train ? out.train_idx : (i < n_train + n_val ? out.val_idx : out.test_idx);
      dst.push_back(group[i]);
    }
  };

  if (spec.stratified) {
    for (auto group : {data.positive_indices(), data.negative_indices()}) {
      if (group.size() < 3) {
        throw DataError("stratified split needs at least 3 samples per class, found " +
                        std::to_string(group.size()));
      }
      assign(shuffled(std::move(group), rng));
    }
  } else {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    assign(shuffled(std::move(all), rng));
  }

  out.train = data.subset(out.train_idx);
  out.val = data.subset(out.val_idx);
  out.test = data.subset(out.test_idx);
  return out;
}

Standardizer Standardizer::fit(const Matrix& train) {
  if (train.rows() == 0) {
    throw DataError("cannot standardize an empty training set");
  }
  Standardizer s;
  s.mean = train.colwise().mean().transpose();
  const Matrix centered = train.rowwise() - s.mean.transpose();
  s.stddev = (centered.array().square().colwise().sum() / static_cast<double>(train.rows())).sqrt().transpose();
  s.stddev = s.stddev.cwiseMax(1e-12);
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  Matrix z = x.rowwise() - mean.transpose();
  z.array().rowwise() /= stddev.transpose().array();
  return z;
}

Matrix Standardizer::invert(const Matrix& z) const {
  Matrix x = z;
  x.array().rowwise() *= stddev.transpose().array();
  x.rowwise() += mean.transpose();
  return x;
}

LabeledDataset Standardizer::apply(const LabeledDataset& data) const {
  LabeledDataset out = data;
  out.features = apply(data.features);
  return out;
}

Standardizer standardize(DataSplits& splits) {
  Standardizer s = Standardizer::fit(splits.train.features);
  splits.train = s.apply(splits.train);
  splits.val = s.apply(splits.val);
  splits.test = s.apply(splits.test);
  return s;
}

std::size_t SynthSpec::minority_count() const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n_total) / (imbalance_ratio + 1.0)));
}

void SynthSpec::validate() const {
  if (!(imbalance_ratio >= 1.0)) {
    throw ConfigError("imbalance ratio must be at least 1");
  }
  if (dim < 1) {
    throw ConfigError("dim must be at least 1");
  }
  if (!(class_separation >= 0.0)) {
    throw ConfigError("class separation must be non-negative");
  }
  if (minority_count() < 2) {
    throw ConfigError("n=" + std::to_string(n_total) + " with IR=" + format_double(imbalance_ratio) +
                      " gives fewer than 2 minority samples");
  }
  if (majority_count() < 1) {
    throw ConfigError("no majority samples");
  }
}

LabeledDataset synth_gaussian_imbalanced(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double offset = spec.class_separation / (2.0 * std::sqrt(static_cast<double>(spec.dim)));
  const std::size_t n_pos = spec.minority_count();

  std::vector<std::size_t> order(spec.n_total);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  LabeledDataset data;
  data.features.resize(static_cast<Eigen::Index>(spec.n_total), static_cast<Eigen::Index>(spec.dim));
  data.labels.assign(spec.n_total, 0);
  for (std::size_t c = 0; c < spec.dim; ++c) {
    data.feature_names.push_back("x" + std::to_string(c));
  }
  for (std::size_t k = 0; k < spec.n_total; ++k) {
    const std::size_t row = order[k];
    const bool positive = k < n_pos;
    data.labels[row] = positive ? 1 : 0;
    for (std::size_t c = 0; c < spec.dim; ++c) {
      data.features(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) =
          (positive ? offset : -offset) + noise(rng);
    }
  }
  return data;
}

}  // namespace aric

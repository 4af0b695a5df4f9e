#include "doctest.h"

#include "aric/adversarial.hpp"
#include "aric/data.hpp"
#include "aric/errors.hpp"
#include "aric/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

using namespace aric;

namespace {

LabeledDataset counted(std::size_t n_pos, std::size_t n_neg) {
  LabeledDataset d;
  d.features = Matrix(static_cast<Eigen::Index>(n_pos + n_neg), 1);
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) d.features(i, 0) = static_cast<double>(i);
  d.labels.assign(n_pos, 1);
  d.labels.resize(n_pos + n_neg, 0);
  d.feature_names = {"x"};
  return d;
}

}  // namespace

TEST_CASE("csv parsing") {
  SUBCASE("label token") {
    std::istringstream in("a,b,y\n1,2,pos\n3,4,neg\n5,6,neg\n");
    const auto d = parse_csv(in, "y", "pos");
    CHECK(d.positive_count() == 1);
    CHECK(d.negative_count() == 2);
    CHECK(d.dim() == 2);
    CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(d.features(2, 1) == 6.0);
  }
  SUBCASE("label column anywhere, whitespace trimmed") {
    std::istringstream in("y, a\n1, 0.5\n0 ,-2e-3\n");
    const auto d = parse_csv(in, "y", "1");
    CHECK(d.labels == std::vector<int>{1, 0});
    CHECK(d.features(1, 0) == -2e-3);
  }
  SUBCASE("non-numeric cell names row and column") {
    std::istringstream in("a,b,y\n1,2,1\n3,oops,0\n");
    try {
      parse_csv(in, "y", "1");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 2") != std::string::npos);
      CHECK(msg.find("'b'") != std::string::npos);
    }
  }
  SUBCASE("structural errors") {
    std::istringstream missing("a,b\n1,2\n");
    CHECK_THROWS_AS(parse_csv(missing, "y", "1"), DataError);
    std::istringstream empty("a,y\n");
    CHECK_THROWS_AS(parse_csv(empty, "y", "1"), DataError);
    std::istringstream ragged("a,y\n1,0\n2\n");
    CHECK_THROWS_AS(parse_csv(ragged, "y", "1"), DataError);
    std::istringstream nothing("");
    CHECK_THROWS_AS(parse_csv(nothing, "y", "1"), DataError);
  }
  SUBCASE("single class warns but loads") {
    std::istringstream in("a,y\n1,0\n2,0\n");
    std::ostringstream warn;
    const auto d = parse_csv(in, "y", "1", &warn);
    CHECK(d.size() == 2);
    CHECK_FALSE(warn.str().empty());
  }
  SUBCASE("sixteen attributes") {
    std::ostringstream text;
    for (int j = 0; j < 16; ++j) text << "f" << j << ',';
    text << "class\n";
    for (int r = 0; r < 5; ++r) {
      for (int j = 0; j < 16; ++j) text << r * j << ',';
      text << (r == 0 ? "P" : "N") << '\n';
    }
    std::istringstream in(text.str());
    CHECK(parse_csv(in, "class", "P").dim() == 16);
  }
}

TEST_CASE("csv round trip through a file") {
  const auto path = std::filesystem::temp_directory_path() / "aric_data_roundtrip.csv";
  SynthSpec spec{.n_total = 50, .imbalance_ratio = 4.0, .dim = 3, .class_separation = 1.0, .seed = 2};
  const auto d = synth_gaussian_imbalanced(spec);
  write_csv(d, path);
  const auto back = load_csv(path, "label", "1");
  CHECK(back.labels == d.labels);
  CHECK(back.features == d.features);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_csv(path, "label", "1"), DataError);
}

TEST_CASE("split") {
  SUBCASE("sizes 6/2/2") {
    SplitSpec s;
    s.stratified = false;
    const auto sp = split(counted(5, 5), s);
    CHECK(sp.train.size() == 6);
    CHECK(sp.val.size() == 2);
    CHECK(sp.test.size() == 2);
  }
  SUBCASE("deterministic") {
    SplitSpec s;
    s.seed = 7;
    const auto a = split(counted(10, 90), s), b = split(counted(10, 90), s);
    CHECK(a.train_idx == b.train_idx);
    CHECK(a.test_idx == b.test_idx);
    s.seed = 8;
    CHECK(split(counted(10, 90), s).train_idx != a.train_idx);
  }
  SUBCASE("stratified 9:1") {
    const auto sp = split(counted(10, 90), SplitSpec{});
    CHECK(sp.train.positive_count() >= 5);
    CHECK(sp.train.positive_count() <= 7);
    CHECK(sp.val.positive_count() >= 1);
    CHECK(sp.test.positive_count() >= 1);
  }
  SUBCASE("partition property over fuzzed sizes and seeds") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t pos = 3 + rng() % 30, neg = 3 + rng() % 200;
      SplitSpec s;
      s.seed = rng();
      s.stratified = trial % 2 == 0;
      const auto sp = split(counted(pos, neg), s);
      std::vector<std::size_t> all = sp.train_idx;
      all.insert(all.end(), sp.val_idx.begin(), sp.val_idx.end());
      all.insert(all.end(), sp.test_idx.begin(), sp.test_idx.end());
      std::sort(all.begin(), all.end());
      CHECK(all.size() == pos + neg);
      CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
      CHECK(all.back() == pos + neg - 1);
      // Rows carry their own index as the feature.
      for (std::size_t i = 0; i < sp.train.size(); ++i) {
        CHECK(sp.train.features(static_cast<Eigen::Index>(i), 0) == static_cast<double>(sp.train_idx[i]));
      }
    }
  }
  SUBCASE("invalid specs") {
    CHECK_THROWS_AS(split(counted(5, 5), SplitSpec{.train_frac = 0.5, .val_frac = 0.2, .test_frac = 0.2}),
                    ConfigError);
    CHECK_THROWS_AS(split(counted(2, 50), SplitSpec{}), DataError);
  }
}

TEST_CASE("standardization") {
  SUBCASE("population std") {
    Matrix x(2, 1);
    x << 0, 2;
    const auto s = Standardizer::fit(x);
    const Matrix z = s.apply(x);
    CHECK(z(0, 0) == -1.0);
    CHECK(z(1, 0) == 1.0);
    Matrix at_mean(1, 1);
    at_mean << 1.0;
    CHECK(s.apply(at_mean)(0, 0) == 0.0);
  }
  SUBCASE("constant column") {
    Matrix x = Matrix::Constant(4, 2, 3.0);
    x(1, 1) = 5.0;
    const Matrix z = Standardizer::fit(x).apply(x);
    CHECK(z.allFinite());
    CHECK(z.col(0).isZero());
  }
  SUBCASE("inverse round trip") {
    SynthSpec spec{.n_total = 200, .imbalance_ratio = 3.0, .dim = 4, .class_separation = 5.0, .seed = 4};
    const auto d = synth_gaussian_imbalanced(spec);
    const auto s = Standardizer::fit(d.features);
    CHECK((s.invert(s.apply(d.features)) - d.features).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("fit on train only") {
    auto sp = split(synth_gaussian_imbalanced(SynthSpec{.n_total = 300, .seed = 5}), SplitSpec{});
    const Matrix raw_test = sp.test.features;
    const auto s = standardize(sp);
    CHECK(sp.train.features.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((sp.test.features - s.apply(raw_test)).isZero());
  }
}

TEST_CASE("synthetic Gaussians") {
  SUBCASE("class counts") {
    const SynthSpec s{.n_total = 10992, .imbalance_ratio = 9.4, .dim = 16};
    CHECK(s.minority_count() == 1057);
    CHECK(s.majority_count() == 9935);
    const auto d = synth_gaussian_imbalanced(s);
    CHECK(d.positive_count() == 1057);
    CHECK(d.negative_count() == 9935);
    CHECK(d.dim() == 16);
  }
  SUBCASE("minority of at least two") {
    CHECK_THROWS_AS(synth_gaussian_imbalanced(SynthSpec{.n_total = 3, .imbalance_ratio = 100.0}), ConfigError);
  }
  SUBCASE("same seed, same data") {
    const SynthSpec s{.n_total = 100, .seed = 3};
    CHECK(synth_gaussian_imbalanced(s).features == synth_gaussian_imbalanced(s).features);
  }
  SUBCASE("class means converge to +-mu") {
    const SynthSpec s{.n_total = 20000, .imbalance_ratio = 1.0, .dim = 4, .class_separation = 2.0, .seed = 6};
    const auto d = synth_gaussian_imbalanced(s);
    const double mu = 2.0 / (2.0 * std::sqrt(4.0));
    const auto pos = d.subset(d.positive_indices()), neg = d.subset(d.negative_indices());
    const double band = 3.0 / std::sqrt(10000.0);
    for (Eigen::Index j = 0; j < 4; ++j) {
      CHECK(std::abs(pos.features.col(j).mean() - mu) < band);
      CHECK(std::abs(neg.features.col(j).mean() + mu) < band);
    }
  }
  SUBCASE("zero separation is indistinguishable") {
    const SynthSpec s{.n_total = 4000, .imbalance_ratio = 3.0, .dim = 2, .class_separation = 0.0, .seed = 8};
    auto sp = split(synth_gaussian_imbalanced(s), SplitSpec{.seed = 1});
    standardize(sp);
    TrainConfig c;
    const auto r = train(c, sp.train, logistic_architecture(2), shallow_generator_architecture(2));
    const Vector p = predict_proba(r.disc, sp.test.features);
    const auto m = evaluate_binary(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                                   sp.test.labels);
    CHECK(std::abs(m.auc - 0.5) < 0.06);
  }
  SUBCASE("separation 6 is nearly separable") {
    const SynthSpec s{.n_total = 2000, .imbalance_ratio = 5.0, .dim = 2, .class_separation = 6.0, .seed = 9};
    auto sp = split(synth_gaussian_imbalanced(s), SplitSpec{.seed = 1});
    standardize(sp);
    TrainConfig c;
    c.train_iters = 0;
    const auto r = train(c, sp.train, logistic_architecture(2), shallow_generator_architecture(2));
    const Vector p = predict_proba(r.disc, sp.test.features);
    const auto m = evaluate_binary(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                                   sp.test.labels);
    CHECK(m.auc > 0.99);
  }
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

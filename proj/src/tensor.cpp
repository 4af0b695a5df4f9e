#include "aric/tensor.hpp"

#include "aric/errors.hpp"

#include <cmath>

namespace aric {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
  }
  return "unknown";
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  // log(1 + e^z) = max(z, 0) + log1p(e^{-|z|})
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double stable_log_sigmoid(double z) { return -softplus(-z); }

double stable_log_one_minus_sigmoid(double z) { return -softplus(z); }

bool all_finite(const Matrix& m) { return m.allFinite(); }

bool all_finite(const Vector& v) { return v.allFinite(); }

Matrix gather_rows(const Matrix& source, const std::vector<std::size_t>& indices) {
  Matrix out(static_cast<Eigen::Index>(indices.size()), source.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= static_cast<std::size_t>(source.rows())) {
      throw ConfigError("gather_rows: index " + std::to_string(indices[i]) + " out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = source.row(static_cast<Eigen::Index>(indices[i]));
  }
  return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) {
    throw ConfigError("vstack: column mismatch");
  }
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

}  // namespace aric

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace aric {

// Row-major so a batch is one sample per row, matching how datasets are stored.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { identity, sigmoid, relu };

const char* activation_name(Activation a);

double sigmoid(double z);
double softplus(double z);

// log(sigmoid(z)) = -softplus(-z); never evaluates sigmoid first.
double stable_log_sigmoid(double z);
// log(1 - sigmoid(z)) = -softplus(z).
double stable_log_one_minus_sigmoid(double z);

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

/// Rows of `source` picked by `indices`, in order (repeats allowed).
Matrix gather_rows(const Matrix& source, const std::vector<std::size_t>& indices);

/// Stack `top` over `bottom`; column counts must agree.
Matrix vstack(const Matrix& top, const Matrix& bottom);

}  // namespace aric

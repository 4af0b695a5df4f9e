#pragma once

#include "aric/tensor.hpp"

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace aric {

struct LayerSpec {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  Activation activation = Activation::identity;
};

/// One dense layer: out = activation(in * weight + bias), weight is input_dim x output_dim.
struct Layer {
  Matrix weight;
  Vector bias;
  Activation activation = Activation::identity;
};

struct MlpParams {
  std::vector<Layer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
};

struct LayerGrad {
  Matrix weight;
  Vector bias;
};

/// Gradient of a scalar w.r.t. every parameter, laid out like MlpParams.
struct MlpGrads {
  std::vector<LayerGrad> layers;
};

/// Hidden layers use `hidden_activation`; the last layer maps to `output_dim` with `output_activation`.
std::vector<LayerSpec> make_architecture(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                         Activation hidden_activation, std::size_t output_dim,
                                         Activation output_activation);

/// Checks dims >= 1 and that consecutive layers chain. Throws ConfigError.
void validate_architecture(std::span<const LayerSpec> specs);

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
MlpParams init_mlp(std::span<const LayerSpec> specs, std::mt19937_64& rng);

MlpGrads zero_grads_like(const MlpParams& params);

/// Layer outputs; element 0 is the input batch, element i + 1 the output of layer i.
using Activations = std::vector<Matrix>;

Activations forward(const MlpParams& params, const Matrix& batch);

struct BackwardResult {
  MlpGrads grads;
  Matrix input_grad;  // d loss / d batch, used when the input is itself trainable
};

/// Backpropagates `output_grad` (d loss / d final activation) through a forward pass.
BackwardResult backward(const MlpParams& params, const Activations& activations, const Matrix& output_grad);

using ParamLoss = std::function<double(const MlpParams&)>;

/// Central differences (loss(theta + eps e_i) - loss(theta - eps e_i)) / 2 eps for every parameter.
MlpGrads finite_difference_grad(const ParamLoss& loss, const MlpParams& params, double epsilon = 1e-5);

enum class Direction { ascent, descent };

/// theta <- theta +- learning_rate * grad. Throws TrainingError tagged with `iteration`
/// when the gradient is not finite.
MlpParams sgd_step(MlpParams params, const MlpGrads& grads, double learning_rate, Direction direction,
                   std::size_t iteration = 0);

std::vector<double> flatten(const MlpParams& params);
std::vector<double> flatten(const MlpGrads& grads);
void unflatten(std::span<const double> values, MlpParams& params);
MlpGrads unflatten_grads(std::span<const double> values, const MlpParams& shape);

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

/// Euclidean distance between two parameter sets of the same shape.
double parameter_distance(const MlpParams& a, const MlpParams& b);

}  // namespace aric

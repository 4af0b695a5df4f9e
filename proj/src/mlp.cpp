#include "aric/mlp.hpp"

#include "aric/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aric {

namespace {

Matrix apply_activation(Matrix pre, Activation a) {
  switch (a) {
    case Activation::identity:
      break;
    case Activation::sigmoid:
      pre = pre.unaryExpr([](double z) { return sigmoid(z); });
      break;
    case Activation::relu:
      pre = pre.cwiseMax(0.0);
      break;
  }
  return pre;
}

// Derivative expressed through the layer output, which is all backward keeps.
Matrix activation_derivative(const Matrix& out, Activation a) {
  switch (a) {
    case Activation::identity:
      return Matrix::Ones(out.rows(), out.cols());
    case Activation::sigmoid:
      return (out.array() * (1.0 - out.array())).matrix();
    case Activation::relu:
      return (out.array() > 0.0).cast<double>().matrix();
  }
  return Matrix::Ones(out.rows(), out.cols());
}

}  // namespace

std::size_t MlpParams::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.rows());
}

std::size_t MlpParams::output_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.cols());
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) {
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return n;
}

std::vector<LayerSpec> make_architecture(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                         Activation hidden_activation, std::size_t output_dim,
                                         Activation output_activation) {
  std::vector<LayerSpec> specs;
  std::size_t prev = input_dim;
  for (std::size_t h : hidden) {
    specs.push_back({prev, h, hidden_activation});
    prev = h;
  }
  specs.push_back({prev, output_dim, output_activation});
  return specs;
}

void validate_architecture(std::span<const LayerSpec> specs) {
  if (specs.empty()) {
    throw ConfigError("architecture has no layers");
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].input_dim < 1 || specs[i].output_dim < 1) {
      throw ConfigError("layer " + std::to_string(i) + " has a zero dimension");
    }
    if (i > 0 && specs[i].input_dim != specs[i - 1].output_dim) {
      throw ConfigError("layer " + std::to_string(i) + " input_dim " + std::to_string(specs[i].input_dim) +
                        " does not match previous output_dim " + std::to_string(specs[i - 1].output_dim));
    }
  }
}

MlpParams init_mlp(std::span<const LayerSpec> specs, std::mt19937_64& rng) {
  validate_architecture(specs);
  MlpParams params;
  params.layers.reserve(specs.size());
  for (const auto& s : specs) {
    const double limit = std::sqrt(6.0 / static_cast<double>(s.input_dim + s.output_dim));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Layer layer;
    layer.weight.resize(static_cast<Eigen::Index>(s.input_dim), static_cast<Eigen::Index>(s.output_dim));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = dist(rng);
      }
    }
    layer.bias = Vector::Zero(static_cast<Eigen::Index>(s.output_dim));
    layer.activation = s.activation;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

MlpGrads zero_grads_like(const MlpParams& params) {
  MlpGrads g;
  g.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return g;
}

Activations forward(const MlpParams& params, const Matrix& batch) {
  if (params.layers.empty()) {
    throw ConfigError("forward: network has no layers");
  }
  if (static_cast<std::size_t>(batch.cols()) != params.input_dim()) {
    throw ConfigError("forward: batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                      std::to_string(params.input_dim()));
  }
  Activations acts;
  acts.reserve(params.layers.size() + 1);
  acts.push_back(batch);
  for (const auto& layer : params.layers) {
    Matrix pre = acts.back() * layer.weight;
    pre.rowwise() += layer.bias.transpose();
    acts.push_back(apply_activation(std::move(pre), layer.activation));
  }
  return acts;
}

BackwardResult backward(const MlpParams& params, const Activations& activations, const Matrix& output_grad) {
  const std::size_t n_layers = params.layers.size();
  if (activations.size() != n_layers + 1) {
    throw std::logic_error("backward: activation count does not match layer count");
  }
  const Matrix& out = activations.back();
  if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols()) {
    throw std::logic_error("backward: output_grad shape does not match network output");
  }

  BackwardResult result;
  result.grads.layers.resize(n_layers);
  Matrix delta = output_grad.cwiseProduct(activation_derivative(out, params.layers.back().activation));
  for (std::size_t i = n_layers; i-- > 0;) {
    const Layer& layer = params.layers[i];
    const Matrix& in = activations[i];
    result.grads.layers[i].weight = in.transpose() * delta;
    result.grads.layers[i].bias = delta.colwise().sum().transpose();
    Matrix upstream = delta * layer.weight.transpose();
    if (i == 0) {
      result.input_grad = std::move(upstream);
    } else {
      delta = upstream.cwiseProduct(activation_derivative(in, params.layers[i - 1].activation));
    }
  }
  return result;
}

MlpGrads finite_difference_grad(const ParamLoss& loss, const MlpParams& params, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw ConfigError("finite_difference_grad: epsilon must be positive");
  }
  std::vector<double> theta = flatten(params);
  std::vector<double> grad(theta.size());
  MlpParams probe = params;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + epsilon;
    unflatten(theta, probe);
    const double up = loss(probe);
    theta[i] = saved - epsilon;
    unflatten(theta, probe);
    const double down = loss(probe);
    theta[i] = saved;
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return unflatten_grads(grad, params);
}

MlpParams sgd_step(MlpParams params, const MlpGrads& grads, double learning_rate, Direction direction,
                   std::size_t iteration) {
  if (!(learning_rate > 0.0)) {
    throw ConfigError("sgd_step: learning rate must be positive");
  }
  if (grads.layers.size() != params.layers.size()) {
    throw std::logic_error("sgd_step: gradient layer count mismatch");
  }
  const double sign = direction == Direction::ascent ? 1.0 : -1.0;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& g = grads.layers[i];
    if (!g.weight.allFinite() || !g.bias.allFinite()) {
      throw TrainingError("non-finite gradient in layer " + std::to_string(i), iteration);
    }
    params.layers[i].weight += sign * learning_rate * g.weight;
    params.layers[i].bias += sign * learning_rate * g.bias;
  }
  return params;
}

std::vector<double> flatten(const MlpParams& params) {
  std::vector<double> out;
  out.reserve(params.parameter_count());
  for (const auto& l : params.layers) {
    out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

std::vector<double> flatten(const MlpGrads& grads) {
  std::vector<double> out;
  for (const auto& l : grads.layers) {
    out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

void unflatten(std::span<const double> values, MlpParams& params) {
  if (values.size() != params.parameter_count()) {
    throw std::logic_error("unflatten: size mismatch");
  }
  std::size_t k = 0;
  for (auto& l : params.layers) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(k), l.weight.size(), l.weight.data());
    k += static_cast<std::size_t>(l.weight.size());
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(k), l.bias.size(), l.bias.data());
    k += static_cast<std::size_t>(l.bias.size());
  }
}

MlpGrads unflatten_grads(std::span<const double> values, const MlpParams& shape) {
  MlpGrads g = zero_grads_like(shape);
  if (values.size() != shape.parameter_count()) {
    throw std::logic_error("unflatten_grads: size mismatch");
  }
  std::size_t k = 0;
  for (auto& l : g.layers) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(k), l.weight.size(), l.weight.data());
    k += static_cast<std::size_t>(l.weight.size());
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(k), l.bias.size(), l.bias.data());
    k += static_cast<std::size_t>(l.bias.size());
  }
  return g;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::logic_error("relative_error: size mismatch");
  }
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

double parameter_distance(const MlpParams& a, const MlpParams& b) {
  const auto fa = flatten(a);
  const auto fb = flatten(b);
  if (fa.size() != fb.size()) {
    throw std::logic_error("parameter_distance: shape mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    s += (fa[i] - fb[i]) * (fa[i] - fb[i]);
  }
  return std::sqrt(s);
}

}  // namespace aric

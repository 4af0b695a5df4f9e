#include "doctest.h"

#include "aric/adversarial.hpp"
#include "aric/errors.hpp"
#include "aric/mlp.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace aric;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

// Loss = sum(output .* direction), so d loss / d output = direction.
double directional_loss(const MlpParams& p, const Matrix& x, const Matrix& dir) {
  return forward(p, x).back().cwiseProduct(dir).sum();
}

// Glorot init with random biases: zero biases put a fully dead relu layer's successors exactly
// on the kink, where one-sided differences disagree with any subgradient.
MlpParams random_params(const std::vector<LayerSpec>& arch, std::mt19937_64& rng) {
  MlpParams p = init_mlp(arch, rng);
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& l : p.layers)
    for (Eigen::Index j = 0; j < l.bias.size(); ++j) l.bias(j) = n(rng);
  return p;
}

double backward_vs_fd(const std::vector<LayerSpec>& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const MlpParams p = random_params(arch, rng);
  const Matrix x = random_matrix(6, static_cast<Eigen::Index>(arch.front().input_dim), rng);
  const Matrix dir = random_matrix(6, static_cast<Eigen::Index>(arch.back().output_dim), rng);
  const auto acts = forward(p, x);
  const auto analytic = backward(p, acts, dir).grads;
  const auto numeric = finite_difference_grad([&](const MlpParams& q) { return directional_loss(q, x, dir); }, p);
  return relative_error(flatten(analytic), flatten(numeric));
}

}  // namespace

TEST_CASE("forward: hand cases") {
  SUBCASE("identity layer") {
    MlpParams p;
    p.layers.push_back({Matrix::Identity(2, 2), Vector::Zero(2), Activation::identity});
    Matrix x(1, 2);
    x << 1, 2;
    const Matrix y = forward(p, x).back();
    CHECK(y(0, 0) == 1.0);
    CHECK(y(0, 1) == 2.0);
  }
  SUBCASE("zero sigmoid layer") {
    MlpParams p;
    p.layers.push_back({Matrix::Zero(3, 4), Vector::Zero(4), Activation::sigmoid});
    Matrix x(2, 3);
    x << 5, -1, 2, 0, 7, -3;
    const Matrix y = forward(p, x).back();
    CHECK((y.array() == 0.5).all());
  }
  SUBCASE("two layers by hand") {
    // h = relu([1,0] W1 + b1) with W1 = [[1,-2],[3,4]], b1 = [0.5,0.5] -> relu([1.5,-1.5]) = [1.5,0]
    // y = sigmoid(h . [2,-1] - 1) = sigmoid(2)
    MlpParams p;
    Matrix w1(2, 2);
    w1 << 1, -2, 3, 4;
    Vector b1(2);
    b1 << 0.5, 0.5;
    Matrix w2(2, 1);
    w2 << 2, -1;
    Vector b2(1);
    b2 << -1;
    p.layers.push_back({w1, b1, Activation::relu});
    p.layers.push_back({w2, b2, Activation::sigmoid});
    Matrix x(1, 2);
    x << 1, 0;
    CHECK(forward(p, x).back()(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
  }
  SUBCASE("dimension mismatch") {
    std::mt19937_64 rng(1);
    const MlpParams p = init_mlp(make_architecture(3, {4}, Activation::relu, 1, Activation::identity), rng);
    CHECK_THROWS_AS(forward(p, Matrix::Zero(2, 5)), ConfigError);
  }
}

TEST_CASE("forward agrees with a loop-based oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const MlpParams p = init_mlp(deep_generator_architecture(4), rng);
    const Matrix x = random_matrix(5, 4, rng);
    const Matrix y = forward(p, x).back();
    const auto ref = oracle::mlp_forward(p, oracle::to_rows(x));
    for (Eigen::Index i = 0; i < 5; ++i) CHECK(y(i, 0) == doctest::Approx(ref[static_cast<std::size_t>(i)][0]).epsilon(1e-12));
  }
}

TEST_CASE("architecture validation") {
  CHECK_THROWS_AS(validate_architecture(std::vector<LayerSpec>{}), ConfigError);
  CHECK_THROWS_AS(validate_architecture(std::vector<LayerSpec>{{2, 3}, {4, 1}}), ConfigError);
  CHECK_THROWS_AS(validate_architecture(std::vector<LayerSpec>{{0, 1}}), ConfigError);
  CHECK_NOTHROW(validate_architecture(shallow_generator_architecture(7)));
  const auto deep = deep_generator_architecture(16);
  CHECK(deep.size() == 7);
  CHECK(deep[0].output_dim == 10);
  CHECK(deep[5].output_dim == 6);
  CHECK(deep.back().output_dim == 1);
}

TEST_CASE("glorot init is deterministic with zero biases") {
  std::mt19937_64 a(9), b(9);
  const auto arch = shallow_generator_architecture(5);
  const MlpParams p = init_mlp(arch, a), q = init_mlp(arch, b);
  CHECK(flatten(p) == flatten(q));
  for (const auto& l : p.layers) {
    CHECK(l.bias.isZero());
    const double limit = std::sqrt(6.0 / static_cast<double>(l.weight.rows() + l.weight.cols()));
    CHECK(l.weight.cwiseAbs().maxCoeff() <= limit);
  }
  CHECK(p.parameter_count() == 5 * 64 + 64 + 64 * 32 + 32 + 32 * 32 + 32 + 32 + 1);
}

TEST_CASE("backward: trivial cases") {
  SUBCASE("zero output gradient") {
    std::mt19937_64 rng(3);
    const MlpParams p = init_mlp(shallow_generator_architecture(3), rng);
    const Matrix x = random_matrix(4, 3, rng);
    const auto r = backward(p, forward(p, x), Matrix::Zero(4, 1));
    for (double g : flatten(r.grads)) CHECK(g == 0.0);
  }
  SUBCASE("single linear unit") {
    MlpParams p;
    p.layers.push_back({Matrix::Constant(3, 1, 0.2), Vector::Zero(1), Activation::identity});
    Matrix x(1, 3);
    x << 1.5, -2, 4;
    const auto r = backward(p, forward(p, x), Matrix::Ones(1, 1));
    CHECK(r.grads.layers[0].weight(0, 0) == 1.5);
    CHECK(r.grads.layers[0].weight(1, 0) == -2.0);
    CHECK(r.grads.layers[0].weight(2, 0) == 4.0);
    CHECK(r.grads.layers[0].bias(0) == 1.0);
    CHECK(r.input_grad(0, 1) == doctest::Approx(0.2));
  }
  SUBCASE("inputs untouched, repeat calls bitwise equal") {
    std::mt19937_64 rng(4);
    const MlpParams p = init_mlp(deep_generator_architecture(3), rng);
    const Matrix x = random_matrix(5, 3, rng);
    const Matrix x_copy = x;
    const auto before = flatten(p);
    const auto a1 = forward(p, x);
    const auto g1 = backward(p, a1, Matrix::Ones(5, 1));
    const auto a2 = forward(p, x);
    const auto g2 = backward(p, a2, Matrix::Ones(5, 1));
    CHECK(x == x_copy);
    CHECK(flatten(p) == before);
    CHECK(a1.back() == a2.back());
    CHECK(flatten(g1.grads) == flatten(g2.grads));
  }
}

TEST_CASE("backward matches finite differences") {
  SUBCASE("random 3-layer net, 1e-5") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto arch = make_architecture(4, {5, 3}, Activation::sigmoid, 2, Activation::identity);
      CHECK(backward_vs_fd(arch, seed) < 1e-5);
    }
  }
  SUBCASE("every architecture in use, 20 seeds") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      CHECK(backward_vs_fd(logistic_architecture(5), seed) < 1e-4);
      CHECK(backward_vs_fd(shallow_generator_architecture(5), seed) < 1e-4);
      CHECK(backward_vs_fd(deep_generator_architecture(5), seed) < 1e-4);
    }
  }
  SUBCASE("input gradient") {
    std::mt19937_64 rng(11);
    const MlpParams p = init_mlp(make_architecture(3, {4}, Activation::sigmoid, 1, Activation::identity), rng);
    Matrix x = random_matrix(2, 3, rng);
    const auto r = backward(p, forward(p, x), Matrix::Ones(2, 1));
    std::vector<double> flat(x.data(), x.data() + x.size());
    const auto num = oracle::numeric_gradient(
        [&](const std::vector<double>& v) {
          const Matrix xv = Eigen::Map<const Matrix>(v.data(), 2, 3);
          return forward(p, xv).back().sum();
        },
        flat);
    std::vector<double> ana(r.input_grad.data(), r.input_grad.data() + r.input_grad.size());
    CHECK(oracle::norm_relative_error(ana, num) < 1e-6);
  }
}

TEST_CASE("finite_difference_grad on closed forms") {
  MlpParams p;
  p.layers.push_back({Matrix::Constant(1, 1, 3.0), Vector::Zero(1), Activation::identity});
  const auto quad = finite_difference_grad(
      [](const MlpParams& q) {
        const double t = q.layers[0].weight(0, 0);
        return 0.5 * t * t;
      },
      p);
  CHECK(std::abs(quad.layers[0].weight(0, 0) - 3.0) < 1e-8);
  CHECK(std::abs(quad.layers[0].bias(0)) < 1e-12);

  const auto constant = finite_difference_grad([](const MlpParams&) { return 4.2; }, p);
  for (double g : flatten(constant)) CHECK(g == 0.0);
}

TEST_CASE("sgd_step") {
  MlpParams p;
  p.layers.push_back({Matrix::Constant(1, 1, 1.0), Vector::Zero(1), Activation::identity});
  MlpGrads g = zero_grads_like(p);

  SUBCASE("zero gradient") { CHECK(flatten(sgd_step(p, g, 0.1, Direction::descent)) == flatten(p)); }
  SUBCASE("descent arithmetic") {
    g.layers[0].weight(0, 0) = 2.0;
    CHECK(sgd_step(p, g, 0.1, Direction::descent).layers[0].weight(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(sgd_step(p, g, 0.1, Direction::ascent).layers[0].weight(0, 0) == doctest::Approx(1.2).epsilon(1e-15));
  }
  SUBCASE("ascent on -theta^2 converges to 0") {
    MlpParams q = p;
    for (int i = 0; i < 200; ++i) {
      MlpGrads gr = zero_grads_like(q);
      gr.layers[0].weight(0, 0) = -2.0 * q.layers[0].weight(0, 0);
      q = sgd_step(q, gr, 0.1, Direction::ascent);
    }
    CHECK(std::abs(q.layers[0].weight(0, 0)) < 1e-12);
  }
  SUBCASE("non-finite gradient names the iteration") {
    g.layers[0].bias(0) = std::nan("");
    try {
      (void)sgd_step(p, g, 0.1, Direction::descent, 42);
      FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
      CHECK(e.iteration() == 42);
    }
  }
  SUBCASE("invalid learning rate") { CHECK_THROWS_AS(sgd_step(p, g, 0.0, Direction::descent), ConfigError); }
}

TEST_CASE("flatten round trip and distances") {
  std::mt19937_64 rng(5);
  const MlpParams p = init_mlp(shallow_generator_architecture(2), rng);
  auto flat = flatten(p);
  MlpParams q = p;
  for (auto& v : flat) v += 1.0;
  unflatten(flat, q);
  CHECK(parameter_distance(p, q) == doctest::Approx(std::sqrt(static_cast<double>(flat.size()))));
  CHECK(parameter_distance(p, p) == 0.0);
  CHECK(relative_error(flat, flat) == 0.0);
}

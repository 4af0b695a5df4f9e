#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace aric::theory {

/// Probability vector on a finite support.
class DiscreteDistribution {
 public:
  /// Throws ConfigError unless entries are finite, >= 0 and sum to 1 within `tolerance`.
  explicit DiscreteDistribution(std::vector<double> probs, double tolerance = 1e-12);

  static DiscreteDistribution uniform(std::size_t k);
  /// Flat Dirichlet draw.
  static DiscreteDistribution random(std::size_t k, std::mt19937_64& rng);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

/// D*(x) = p+(x) / (p+(x) + p-(x)). Throws when both are zero at some point.
std::vector<double> optimal_discriminator(const DiscreteDistribution& p_plus, const DiscreteDistribution& p_neg);

/// sum p+ log D + sum p- log(1 - D). Throws when a term would be -infinity.
double value_V(const DiscreteDistribution& p_plus, const DiscreteDistribution& p_neg, std::span<const double> d);

/// Cost the generator faces against the optimal discriminator:
///   sum p+ log(p+ / (p+ + p)) + sum p log(p / (p+ + p)) + lambda sum p log p,  with 0 log 0 = 0.
double generator_objective(std::span<const double> p, const DiscreteDistribution& p_plus, double lambda);

/// Partial derivatives of generator_objective: log(p / (p + p+)) + lambda (log p + 1).
std::vector<double> generator_objective_gradient(std::span<const double> p, const DiscreteDistribution& p_plus,
                                                 double lambda);

struct TheoryConfig {
  double lambda = 0.0;
  std::size_t max_iters = 100000;
  std::optional<double> step;  // unset means 1 / (1 + lambda)
  double tol = 1e-12;          // on the max coordinate change per iteration

  double effective_step() const;
  void validate() const;
};

struct GeneratorMinimum {
  std::vector<double> p;
  bool converged = false;
  std::size_t iterations = 0;
  double objective = 0.0;
};

using IterateObserver = std::function<void(std::size_t iteration, const std::vector<double>& p)>;

/// Exponentiated-gradient descent from the uniform distribution:
///   p <- normalize(p * exp(-step * grad)).
GeneratorMinimum minimize_generator(const DiscreteDistribution& p_plus, const TheoryConfig& config,
                                    const IterateObserver& observer = {});

/// max_x | p^(lambda+1) / sum p^(lambda+1) - (p + p+) / 2 |.
double theorem1_residual(std::span<const double> p, const DiscreteDistribution& p_plus, double lambda);

/// Half the L1 distance.
double total_variation(std::span<const double> a, std::span<const double> b);

}  // namespace aric::theory

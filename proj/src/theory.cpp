#include "aric/theory.hpp"

#include "aric/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace aric::theory {

namespace {

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

void require_aligned(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ConfigError("distributions have different support sizes (" + std::to_string(a) + " vs " +
                      std::to_string(b) + ")");
  }
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<double> probs, double tolerance) : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw ConfigError("distribution has empty support");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ConfigError("distribution entries must be finite and non-negative");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw ConfigError("distribution sums to " + std::to_string(sum) + ", not 1");
  }
}

DiscreteDistribution DiscreteDistribution::uniform(std::size_t k) {
  return DiscreteDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

DiscreteDistribution DiscreteDistribution::random(std::size_t k, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> p(k);
  for (auto& v : p) v = expo(rng);
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= s;
  return DiscreteDistribution(std::move(p), 1e-9);
}

std::vector<double> optimal_discriminator(const DiscreteDistribution& p_plus, const DiscreteDistribution& p_neg) {
  require_aligned(p_plus.size(), p_neg.size());
  std::vector<double> d(p_plus.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double denom = p_plus[i] + p_neg[i];
    if (denom == 0.0) {
      throw ConfigError("both distributions vanish at support point " + std::to_string(i));
    }
    d[i] = p_plus[i] / denom;
  }
  return d;
}

double value_V(const DiscreteDistribution& p_plus, const DiscreteDistribution& p_neg, std::span<const double> d) {
  require_aligned(p_plus.size(), p_neg.size());
  require_aligned(p_plus.size(), d.size());
  double v = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] >= 0.0 && d[i] <= 1.0)) {
      throw ConfigError("discriminator value outside [0, 1] at point " + std::to_string(i));
    }
    if ((p_plus[i] > 0.0 && d[i] == 0.0) || (p_neg[i] > 0.0 && d[i] == 1.0)) {
      throw ConfigError("value is -infinity: D saturates where its paired density is positive (point " +
                        std::to_string(i) + ")");
    }
    v += xlogy(p_plus[i], d[i]) + xlogy(p_neg[i], 1.0 - d[i]);
  }
  return v;
}

double generator_objective(std::span<const double> p, const DiscreteDistribution& p_plus, double lambda) {
  require_aligned(p.size(), p_plus.size());
  double v = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double mix = p_plus[i] + p[i];
    if (mix == 0.0) continue;
    v += xlogy(p_plus[i], p_plus[i] / mix) + xlogy(p[i], p[i] / mix) + lambda * xlogy(p[i], p[i]);
  }
  return v;
}

std::vector<double> generator_objective_gradient(std::span<const double> p, const DiscreteDistribution& p_plus,
                                                 double lambda) {
  require_aligned(p.size(), p_plus.size());
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    // The p+ log(p+/(p+ + p)) and p log(p/(p+ + p)) derivatives combine to log(p/(p+ + p)).
    g[i] = std::log(p[i] / (p[i] + p_plus[i])) + lambda * (std::log(p[i]) + 1.0);
  }
  return g;
}

double TheoryConfig::effective_step() const { return step.value_or(1.0 / (1.0 + lambda)); }

void TheoryConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!(effective_step() > 0.0)) throw ConfigError("step must be positive");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
}

GeneratorMinimum minimize_generator(const DiscreteDistribution& p_plus, const TheoryConfig& config,
                                    const IterateObserver& observer) {
  config.validate();
  const std::size_t k = p_plus.size();
  const double step = config.effective_step();
  std::vector<double> p(k, 1.0 / static_cast<double>(k));
  std::vector<double> log_next(k);
  GeneratorMinimum out;
  if (observer) observer(0, p);
  for (std::size_t it = 1; it <= config.max_iters; ++it) {
    const auto g = generator_objective_gradient(p, p_plus, config.lambda);
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      log_next[i] = std::log(p[i]) - step * g[i];
      hi = std::max(hi, log_next[i]);
    }
    double z = 0.0;
    for (double l : log_next) z += std::exp(l - hi);
    double change = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double next = std::exp(log_next[i] - hi) / z;
      change = std::max(change, std::abs(next - p[i]));
      p[i] = next;
    }
    out.iterations = it;
    if (observer) observer(it, p);
    if (change < config.tol) {
      out.converged = true;
      break;
    }
  }
  out.objective = generator_objective(p, p_plus, config.lambda);
  out.p = std::move(p);
  return out;
}

double theorem1_residual(std::span<const double> p, const DiscreteDistribution& p_plus, double lambda) {
  require_aligned(p.size(), p_plus.size());
  std::vector<double> powered(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) powered[i] = std::pow(p[i], lambda + 1.0);
  const double norm = std::accumulate(powered.begin(), powered.end(), 0.0);
  double r = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    r = std::max(r, std::abs(powered[i] / norm - 0.5 * (p[i] + p_plus[i])));
  }
  return r;
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  require_aligned(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace aric::theory

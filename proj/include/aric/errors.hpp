#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aric {

/// Invalid shapes, hyperparameters, or flag values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data (files, labels, graphs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure during optimization; carries the iteration at which it happened.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace aric

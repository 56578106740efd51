#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace neuroskin {

/// Per-dimension box [lower_i, upper_i].
struct Bounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Bounds uniform(std::size_t n, double lo, double hi);

  std::size_t dimension() const { return static_cast<std::size_t>(lower.size()); }
  bool contains(const Eigen::VectorXd& x) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
  /// Throws ConfigError unless sizes agree and lower < upper everywhere.
  void validate() const;
};

}  // namespace neuroskin

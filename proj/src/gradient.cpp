#include "neuroskin/gradient.hpp"

#include <cmath>
#include <string>

#include "neuroskin/error.hpp"
#include "neuroskin/parallel.hpp"

namespace neuroskin {

GradientResult forward_diff_gradient(const Objective& f, const Eigen::VectorXd& x, const GradientOptions& options,
                                     const Bounds* bounds) {
  if (!(options.delta > 0.0)) throw ConfigError("finite-difference step must be positive");
  const Eigen::Index n = x.size();
  if (bounds && static_cast<Eigen::Index>(bounds->dimension()) != n)
    throw ShapeError("bounds dimension does not match x");

  Eigen::VectorXd steps(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double h = options.mode == StepMode::Absolute ? options.delta : options.delta * std::max(std::abs(x[i]), 1.0);
    if (bounds && x[i] + h > bounds->upper[i]) h = -h;
    steps[i] = h;
  }

  const auto values = parallel_map(static_cast<std::size_t>(n) + 1, options.workers, [&](std::size_t k) {
    Eigen::VectorXd point = x;
    if (k > 0) point[static_cast<Eigen::Index>(k) - 1] += steps[static_cast<Eigen::Index>(k) - 1];
    try {
      return f(point);
    } catch (const std::exception& e) {
      throw GradientError("gradient evaluation " + std::to_string(k) + " failed: " + e.what(), k);
    }
  });

  GradientResult result;
  result.f = values[0];
  result.g.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) result.g[i] = (values[static_cast<std::size_t>(i) + 1] - values[0]) / steps[i];
  result.evaluations_used = values.size();
  return result;
}

}  // namespace neuroskin

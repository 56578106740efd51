#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "neuroskin/bounds.hpp"
#include "neuroskin/pso.hpp"

namespace neuroskin {

enum class StepMode {
  Absolute,  // h = delta
  Relative,  // h = delta * max(|x_i|, 1)
};

struct GradientOptions {
  double delta = 1.0e-2;
  StepMode mode = StepMode::Absolute;
  std::size_t workers = 1;
};

struct GradientResult {
  double f = 0.0;
  Eigen::VectorXd g;
  std::size_t evaluations_used = 0;  // always n + 1
};

/// g_i = (f(x + h e_i) - f(x)) / h. The n + 1 evaluations are independent
/// and run on up to options.workers threads. When `bounds` is given and
/// x_i + h would leave the box, the step is taken backwards instead. A
/// failing evaluation is rethrown as GradientError naming its index.
GradientResult forward_diff_gradient(const Objective& f, const Eigen::VectorXd& x, const GradientOptions& options,
                                     const Bounds* bounds = nullptr);

}  // namespace neuroskin

#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "neuroskin/bounds.hpp"

namespace neuroskin {

struct QuasiNewtonOptions {
  int memory = 10;
  int max_iterations = 15000;
  int max_function_evals = 15000;
  /// Stop when (f_k - f_{k+1}) <= factr * eps * max(|f_k|, |f_{k+1}|, 1).
  double factr = 1.0e7;
  /// Stop when the projected gradient max-norm falls to this value.
  double pgtol = 1.0e-5;
  Bounds bounds;

  void validate() const;
};

struct ValueAndGradient {
  double f = 0.0;
  Eigen::VectorXd g;
};

using ValueAndGradientFn = std::function<ValueAndGradient(const Eigen::VectorXd&)>;
/// Called once per accepted iterate with the new point and its value.
using IterateCallback = std::function<void(const Eigen::VectorXd&, double)>;

enum class StopReason {
  ProjectedGradient,
  RelativeReduction,
  MaxIterations,
  MaxFunctionEvals,
  LineSearchFailed,
};

std::string_view to_string(StopReason reason);

struct QuasiNewtonResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd g;
  int iterations = 0;
  int function_evals = 0;
  StopReason reason = StopReason::MaxIterations;
  /// f after every accepted iterate (the start value first).
  std::vector<double> accepted_f;
  /// g'd of every search direction tried; all negative.
  std::vector<double> directional_derivatives;

  bool line_search_failed() const { return reason == StopReason::LineSearchFailed; }
};

/// Limited-memory BFGS on a box.
///
/// Each iteration fixes the variables sitting on a bound with the gradient
/// pushing outwards, builds the search direction with the two-loop
/// recursion over the stored (s, y) pairs restricted to the remaining
/// variables, and searches along the projected path P(x + a d). The search
/// backtracks until the sufficient-decrease condition holds and expands the
/// step while the slope along the path stays steep, which lets the first
/// steepest-descent iteration adapt to badly scaled variables. Pairs with
/// s'y <= 1e-10 |s||y| are dropped. x0 must lie inside the bounds; every
/// iterate does too. A failed line search ends the run with the best point
/// found and StopReason::LineSearchFailed.
QuasiNewtonResult lbfgsb_minimize(const ValueAndGradientFn& fg, const Eigen::VectorXd& x0,
                                  const QuasiNewtonOptions& options, const IterateCallback& on_iterate = {});

}  // namespace neuroskin

#include "neuroskin/lbfgsb.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "neuroskin/error.hpp"

namespace neuroskin {
namespace {

constexpr double kSufficientDecrease = 1.0e-4;
constexpr double kSteepSlope = 0.9;
constexpr double kExpansion = 4.0;
constexpr double kPairSkip = 1.0e-10;
constexpr double kMaxStep = 1.0e20;
constexpr int kMaxBacktracks = 40;
constexpr int kMaxExpansions = 40;

using Eigen::VectorXd;

struct CurvaturePair {
  VectorXd s;
  VectorXd y;
};

double projected_gradient_norm(const VectorXd& x, const VectorXd& g, const Bounds& bounds) {
  const VectorXd projected = bounds.clamp(x - g);
  return (projected - x).cwiseAbs().maxCoeff();
}

// Variables held fixed this iteration: on a bound with -g pointing outwards.
std::vector<bool> free_mask(const VectorXd& x, const VectorXd& g, const Bounds& bounds) {
  std::vector<bool> mask(static_cast<std::size_t>(x.size()), true);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= bounds.lower[i] && g[i] > 0.0) || (x[i] >= bounds.upper[i] && g[i] < 0.0))
      mask[static_cast<std::size_t>(i)] = false;
  }
  return mask;
}

VectorXd masked(const VectorXd& v, const std::vector<bool>& mask) {
  VectorXd out = v;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!mask[static_cast<std::size_t>(i)]) out[i] = 0.0;
  return out;
}

struct Direction {
  VectorXd d;
  bool used_pairs = false;
};

// Two-loop recursion on the free subspace.
Direction search_direction(const VectorXd& g, const std::deque<CurvaturePair>& pairs, const std::vector<bool>& mask) {
  VectorXd q = masked(g, mask);
  const std::size_t m = pairs.size();
  std::vector<double> alpha(m, 0.0), rho(m, 0.0);
  std::vector<bool> used(m, false);
  std::vector<VectorXd> s_free(m), y_free(m);
  double gamma = 1.0;
  bool have_gamma = false;

  for (std::size_t k = m; k-- > 0;) {
    s_free[k] = masked(pairs[k].s, mask);
    y_free[k] = masked(pairs[k].y, mask);
    const double sy = s_free[k].dot(y_free[k]);
    if (!(sy > kPairSkip * s_free[k].norm() * y_free[k].norm())) continue;
    used[k] = true;
    rho[k] = 1.0 / sy;
    alpha[k] = rho[k] * s_free[k].dot(q);
    q -= alpha[k] * y_free[k];
    if (!have_gamma) {
      gamma = sy / y_free[k].squaredNorm();
      have_gamma = true;
    }
  }
  VectorXd r = gamma * q;
  for (std::size_t k = 0; k < m; ++k) {
    if (!used[k]) continue;
    const double beta = rho[k] * y_free[k].dot(r);
    r += s_free[k] * (alpha[k] - beta);
  }
  return {-masked(r, mask), have_gamma};
}

// Largest step after which P(x + a d) stops moving.
double path_end(const VectorXd& x, const VectorXd& d, const Bounds& bounds) {
  double end = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double t = kMaxStep;
    if (d[i] > 0.0) t = (bounds.upper[i] - x[i]) / d[i];
    else if (d[i] < 0.0) t = (bounds.lower[i] - x[i]) / d[i];
    else continue;
    end = std::max(end, std::min(t, kMaxStep));
  }
  return end;
}

// Components of d that still move the point at `xt`.
VectorXd active_direction(const VectorXd& xt, const VectorXd& d, const Bounds& bounds) {
  VectorXd out = d;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if ((d[i] > 0.0 && xt[i] >= bounds.upper[i]) || (d[i] < 0.0 && xt[i] <= bounds.lower[i])) out[i] = 0.0;
  }
  return out;
}

}  // namespace

void QuasiNewtonOptions::validate() const {
  bounds.validate();
  if (memory < 1) throw ConfigError("quasi-Newton memory must be at least 1");
  if (max_iterations < 0 || max_function_evals < 1) throw ConfigError("quasi-Newton budgets must be positive");
  if (!(factr >= 0.0) || !(pgtol >= 0.0)) throw ConfigError("quasi-Newton tolerances must be non-negative");
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::ProjectedGradient: return "projected_gradient";
    case StopReason::RelativeReduction: return "relative_reduction";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::MaxFunctionEvals: return "max_function_evals";
    case StopReason::LineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

QuasiNewtonResult lbfgsb_minimize(const ValueAndGradientFn& fg, const VectorXd& x0, const QuasiNewtonOptions& options,
                                  const IterateCallback& on_iterate) {
  options.validate();
  const Bounds& bounds = options.bounds;
  if (static_cast<std::size_t>(x0.size()) != bounds.dimension()) throw ShapeError("x0 dimension does not match bounds");
  if (!bounds.contains(x0)) throw ConfigError("x0 lies outside the bounds");

  QuasiNewtonResult result;
  result.x = x0;
  ValueAndGradient current = fg(result.x);
  result.function_evals = 1;
  if (current.g.size() != x0.size()) throw ShapeError("gradient dimension does not match x");
  result.accepted_f.push_back(current.f);

  std::deque<CurvaturePair> pairs;
  const double eps = std::numeric_limits<double>::epsilon();
  result.reason = StopReason::MaxIterations;

  while (true) {
    if (projected_gradient_norm(result.x, current.g, bounds) <= options.pgtol) {
      result.reason = StopReason::ProjectedGradient;
      break;
    }
    if (result.iterations >= options.max_iterations) {
      result.reason = StopReason::MaxIterations;
      break;
    }
    if (result.function_evals >= options.max_function_evals) {
      result.reason = StopReason::MaxFunctionEvals;
      break;
    }

    const std::vector<bool> mask = free_mask(result.x, current.g, bounds);
    Direction dir = search_direction(current.g, pairs, mask);
    double slope = current.g.dot(dir.d);
    if (!(slope < 0.0)) {
      pairs.clear();
      dir = {-masked(current.g, mask), false};
      slope = current.g.dot(dir.d);
      if (!(slope < 0.0)) {
        result.reason = StopReason::ProjectedGradient;
        break;
      }
    }
    result.directional_derivatives.push_back(slope);

    // Line search along the projected path.
    const double end = path_end(result.x, dir.d, bounds);
    double step = dir.used_pairs ? 1.0 : std::min(1.0 / dir.d.norm(), end);
    bool have_point = false;
    bool backtracked = false;
    int backtracks = 0;
    int expansions = 0;
    VectorXd best_x;
    ValueAndGradient best;
    while (result.function_evals < options.max_function_evals) {
      const VectorXd trial_x = bounds.clamp(result.x + step * dir.d);
      const VectorXd moved = trial_x - result.x;
      if (moved.cwiseAbs().maxCoeff() == 0.0) break;
      ValueAndGradient trial = fg(trial_x);
      ++result.function_evals;
      const double predicted = current.g.dot(moved);
      if (std::isfinite(trial.f) && trial.f <= current.f + kSufficientDecrease * predicted) {
        best_x = trial_x;
        best = std::move(trial);
        have_point = true;
        const VectorXd along = active_direction(trial_x, dir.d, bounds);
        const double initial_slope = current.g.dot(along);
        const bool steep = initial_slope < 0.0 && best.g.dot(along) < kSteepSlope * initial_slope;
        if (!backtracked && steep && step < end && expansions < kMaxExpansions) {
          step = std::min(step * kExpansion, end);
          ++expansions;
          continue;
        }
        break;
      }
      if (have_point) break;  // overshot while expanding; keep the last good step
      backtracked = true;
      if (++backtracks > kMaxBacktracks) break;
      // Safeguarded quadratic interpolation of f along the path.
      const double rise = std::isfinite(trial.f) ? trial.f - current.f - predicted : 0.0;
      double next = 0.5 * step;
      if (rise > 0.0) next = std::clamp(-predicted * step / (2.0 * rise), 0.1 * step, 0.5 * step);
      step = next;
    }
    if (!have_point) {
      result.reason = result.function_evals >= options.max_function_evals ? StopReason::MaxFunctionEvals
                                                                           : StopReason::LineSearchFailed;
      break;
    }

    CurvaturePair pair{best_x - result.x, best.g - current.g};
    if (pair.s.dot(pair.y) > kPairSkip * pair.s.norm() * pair.y.norm()) {
      pairs.push_back(std::move(pair));
      if (pairs.size() > static_cast<std::size_t>(options.memory)) pairs.pop_front();
    }
    const double previous_f = current.f;
    result.x = std::move(best_x);
    current = std::move(best);
    ++result.iterations;
    result.accepted_f.push_back(current.f);
    if (on_iterate) on_iterate(result.x, current.f);

    const double scale = std::max({std::abs(previous_f), std::abs(current.f), 1.0});
    if (previous_f - current.f <= options.factr * eps * scale) {
      result.reason = StopReason::RelativeReduction;
      break;
    }
  }
  result.f = current.f;
  result.g = current.g;
  return result;
}

}  // namespace neuroskin

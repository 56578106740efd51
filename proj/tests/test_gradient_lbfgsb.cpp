#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "neuroskin/error.hpp"
#include "neuroskin/fe_dynamics.hpp"
#include "neuroskin/gradient.hpp"
#include "neuroskin/lbfgsb.hpp"
#include "neuroskin/objective.hpp"

using namespace neuroskin;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ValueAndGradient rosenbrock(const VectorXd& x) {
  const double a = 1 - x[0], b = x[1] - x[0] * x[0];
  return {a * a + 100 * b * b, vec({-2 * a - 400 * x[0] * b, 200 * b})};
}

QuasiNewtonOptions tight(Bounds b) {
  QuasiNewtonOptions o;
  o.bounds = std::move(b);
  o.factr = 10.0;
  o.pgtol = 1e-12;
  o.max_iterations = 500;
  o.max_function_evals = 2000;
  return o;
}

}  // namespace

TEST(ForwardDiff, ConstantFunctionHasZeroGradient) {
  const GradientResult r = forward_diff_gradient([](const VectorXd&) { return 4.0; }, vec({1, 2, 3}), {});
  EXPECT_EQ(r.g, VectorXd::Zero(3));
  EXPECT_EQ(r.f, 4.0);
  EXPECT_EQ(r.evaluations_used, 4u);
}

TEST(ForwardDiff, QuadraticWithinTolerance) {
  const Objective f = [](const VectorXd& x) { return x[0] * x[0] + 2 * x[1] * x[1]; };
  const GradientResult r = forward_diff_gradient(f, vec({1, 1}), GradientOptions{1e-6, StepMode::Absolute, 1});
  EXPECT_NEAR(r.g[0], 2.0, 1e-4);
  EXPECT_NEAR(r.g[1], 4.0, 1e-4);
}

TEST(ForwardDiff, SumOfSquaresTenDimensions) {
  const Objective f = [](const VectorXd& x) { return x.squaredNorm(); };
  const VectorXd x = VectorXd::LinSpaced(10, -3.0, 4.0);
  const GradientResult r = forward_diff_gradient(f, x, GradientOptions{1e-6, StepMode::Absolute, 3});
  EXPECT_LT((r.g - 2 * x).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(ForwardDiff, ExactOnLinearFunctionWithDyadicStep) {
  const Objective f = [](const VectorXd& x) { return 3 * x[0] - 0.5 * x[1] + 0.25 * x[2]; };
  const GradientResult r = forward_diff_gradient(f, vec({1, 2, 4}), GradientOptions{0x1.0p-10, StepMode::Absolute, 1});
  EXPECT_EQ(r.g, vec({3, -0.5, 0.25}));
}

TEST(ForwardDiff, RelativeStep) {
  const Objective f = [](const VectorXd& x) { return x[0] * x[0]; };
  const GradientResult r = forward_diff_gradient(f, vec({1000}), GradientOptions{1e-6, StepMode::Relative, 1});
  // h = 1e-3, forward error h.
  EXPECT_NEAR(r.g[0], 2000.0 + 1e-3, 1e-6);
}

TEST(ForwardDiff, StepsBackwardsAtUpperBound) {
  const Objective f = [](const VectorXd& x) {
    if (x[0] > 1.0) throw std::runtime_error("left the box");
    return x[0] * x[0];
  };
  const Bounds b = Bounds::uniform(1, 0.0, 1.0);
  const GradientResult r = forward_diff_gradient(f, vec({1.0}), GradientOptions{0x1.0p-8, StepMode::Absolute, 1}, &b);
  EXPECT_EQ(r.g[0], 2.0 - 0x1.0p-8);
}

TEST(ForwardDiff, FailureNamesIndex) {
  const Objective f = [](const VectorXd& x) {
    if (x[1] > 1.0) throw std::runtime_error("diverged");
    return x.sum();
  };
  try {
    forward_diff_gradient(f, vec({0, 1, 0}), GradientOptions{0.5, StepMode::Absolute, 2});
    FAIL() << "expected GradientError";
  } catch (const GradientError& e) {
    EXPECT_EQ(e.index(), 2u);
  }
  EXPECT_THROW(forward_diff_gradient(f, vec({0}), GradientOptions{0.0, StepMode::Absolute, 1}), ConfigError);
}

TEST(ForwardDiff, WorkerCountDoesNotChangeResult) {
  const Objective f = [](const VectorXd& x) { return std::sin(x[0]) * std::exp(x[1]) + x.cwiseAbs2().sum(); };
  const VectorXd x = vec({0.3, -0.2, 1.1, 0.7, 2.0});
  const GradientResult a = forward_diff_gradient(f, x, GradientOptions{1e-5, StepMode::Absolute, 1});
  const GradientResult b = forward_diff_gradient(f, x, GradientOptions{1e-5, StepMode::Absolute, 6});
  EXPECT_EQ(a.g, b.g);
  EXPECT_EQ(a.f, b.f);
}

TEST(Lbfgsb, OneDimensionalQuadraticInterior) {
  const auto fg = [](const VectorXd& x) { return ValueAndGradient{(x[0] - 3) * (x[0] - 3), vec({2 * (x[0] - 3)})}; };
  const QuasiNewtonResult r = lbfgsb_minimize(fg, vec({-7}), tight(Bounds::uniform(1, -10, 10)));
  EXPECT_NEAR(r.x[0], 3.0, 1e-8);
  EXPECT_FALSE(r.line_search_failed());
}

TEST(Lbfgsb, ActiveBoundIsHitExactly) {
  const auto fg = [](const VectorXd& x) {
    return ValueAndGradient{(x[0] - 7) * (x[0] - 7) + (x[1] + 1) * (x[1] + 1), vec({2 * (x[0] - 7), 2 * (x[1] + 1)})};
  };
  const QuasiNewtonResult r = lbfgsb_minimize(fg, vec({0, 0}), tight(Bounds{vec({-5, -5}), vec({5, 5})}));
  EXPECT_EQ(r.x[0], 5.0);
  EXPECT_NEAR(r.x[1], -1.0, 1e-8);
  EXPECT_EQ(r.reason, StopReason::ProjectedGradient);
}

TEST(Lbfgsb, RosenbrockReachesMinimum) {
  std::vector<VectorXd> iterates;
  const Bounds b{vec({-2, -2}), vec({2, 2})};
  const QuasiNewtonResult r = lbfgsb_minimize(rosenbrock, vec({-1.2, 1.0}), tight(b),
                                              [&](const VectorXd& x, double) { iterates.push_back(x); });
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
  EXPECT_NEAR(r.x[1], 1.0, 1e-4);
  ASSERT_FALSE(iterates.empty());
  for (const auto& x : iterates) EXPECT_TRUE(b.contains(x));
  for (std::size_t k = 1; k < r.accepted_f.size(); ++k) EXPECT_LE(r.accepted_f[k], r.accepted_f[k - 1]);
  for (double d : r.directional_derivatives) EXPECT_LT(d, 0.0);
}

TEST(Lbfgsb, RosenbrockWithCutOffOptimum) {
  // With x <= 0.5 the minimum sits on the bound at (0.5, 0.25).
  const Bounds b{vec({-2, -2}), vec({0.5, 2})};
  const QuasiNewtonResult r = lbfgsb_minimize(rosenbrock, vec({-1.2, 1.0}), tight(b));
  EXPECT_EQ(r.x[0], 0.5);
  EXPECT_NEAR(r.x[1], 0.25, 1e-6);
}

TEST(Lbfgsb, BadlyScaledVariables) {
  // Gradient ~1e-6 at x ~ 5e5, the scale of the membrane moduli.
  const auto fg = [](const VectorXd& x) {
    const VectorXd d = (x.array() - 500000.0).matrix();
    const VectorXd w = vec({1e-10, 2e-10, 4e-10});
    return ValueAndGradient{(w.array() * d.array().square()).sum(), (2 * w.array() * d.array()).matrix()};
  };
  QuasiNewtonOptions o;
  o.bounds = Bounds::uniform(3, 400000, 550000);
  o.pgtol = 0;
  o.max_iterations = 60;
  const QuasiNewtonResult r = lbfgsb_minimize(fg, VectorXd::Constant(3, 450000), o);
  EXPECT_LT((r.x.array() - 500000.0).abs().maxCoeff(), 50.0);
}

TEST(Lbfgsb, LyingGradientFailsLineSearch) {
  // Reported gradient points uphill, so no step along -g decreases f.
  const auto fg = [](const VectorXd& x) { return ValueAndGradient{x.squaredNorm(), -2 * x}; };
  const QuasiNewtonResult r = lbfgsb_minimize(fg, vec({1, 1}), tight(Bounds::uniform(2, -5, 5)));
  EXPECT_TRUE(r.line_search_failed());
  EXPECT_EQ(r.x, vec({1, 1}));
  EXPECT_EQ(r.f, 2.0);
}

TEST(Lbfgsb, BudgetsAreRespected) {
  QuasiNewtonOptions o = tight(Bounds::uniform(2, -2, 2));
  o.max_iterations = 3;
  QuasiNewtonResult r = lbfgsb_minimize(rosenbrock, vec({-1.2, 1.0}), o);
  EXPECT_EQ(r.iterations, 3);
  EXPECT_EQ(r.reason, StopReason::MaxIterations);
  o.max_iterations = 500;
  o.max_function_evals = 7;
  int calls = 0;
  r = lbfgsb_minimize([&](const VectorXd& x) { ++calls; return rosenbrock(x); }, vec({-1.2, 1.0}), o);
  EXPECT_LE(calls, 7);
  EXPECT_EQ(r.function_evals, calls);
  EXPECT_EQ(r.reason, StopReason::MaxFunctionEvals);
}

TEST(Lbfgsb, StartAtOptimumStopsImmediately) {
  const QuasiNewtonResult r = lbfgsb_minimize(rosenbrock, vec({1, 1}), tight(Bounds::uniform(2, -2, 2)));
  EXPECT_EQ(r.x, vec({1, 1}));
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.reason, StopReason::ProjectedGradient);
}

TEST(Lbfgsb, RejectsInfeasibleStart) {
  EXPECT_THROW(lbfgsb_minimize(rosenbrock, vec({3, 0}), tight(Bounds::uniform(2, -2, 2))), ConfigError);
  QuasiNewtonOptions o = tight(Bounds::uniform(2, -2, 2));
  o.memory = 0;
  EXPECT_THROW(lbfgsb_minimize(rosenbrock, vec({0, 0}), o), ConfigError);
}

namespace {

struct MembraneRun {
  QuasiNewtonResult result;
  int gradient_evals = 0;
};

MembraneRun membrane_run(double pgtol) {
  const MembraneModel model = build_membrane(MembraneSpec{});
  ObjectiveSetup setup{model, make_demo_inputs(11, 1e-3, 80), 1e-3, 80, {}, ParameterMode::ElementModulusGroups,
                       ObjectiveKind::Rmse, {}};
  setup.simulation.damping = {4.0, 0.0};
  setup.target = simulate(model, setup.inputs, setup.dt, setup.steps, setup.simulation).horizontal;
  const Objective f = [&](const VectorXd& x) {
    return objective_from_model(setup, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  };
  QuasiNewtonOptions o;
  o.bounds = Bounds::uniform(4, 400000, 550000);
  o.max_iterations = 5;
  o.max_function_evals = 100;
  o.factr = 1e12;
  o.pgtol = pgtol;
  const GradientOptions go{1e-2, StepMode::Absolute, 2};
  int gradient_evals = 0;
  const QuasiNewtonResult r = lbfgsb_minimize(
      [&](const VectorXd& x) {
        const GradientResult g = forward_diff_gradient(f, x, go, &o.bounds);
        gradient_evals += static_cast<int>(g.evaluations_used);
        return ValueAndGradient{g.f, g.g};
      },
      VectorXd::Constant(4, 450000.0), o);
  return {r, gradient_evals};
}

}  // namespace

TEST(Lbfgsb, MembraneGradientIsBelowDefaultPgtol) {
  // Modulus sensitivities are ~1e-6 per MPa, so the default projected
  // gradient tolerance accepts the starting point.
  const MembraneRun run = membrane_run(1e-5);
  EXPECT_EQ(run.result.iterations, 0);
  EXPECT_EQ(run.result.reason, StopReason::ProjectedGradient);
  EXPECT_EQ(run.result.x, VectorXd::Constant(4, 450000.0));
  EXPECT_GT(run.result.g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Lbfgsb, MembraneObjectiveWithReferenceBudgetsIsMonotone) {
  const MembraneRun run = membrane_run(0.0);
  const QuasiNewtonResult& r = run.result;
  ASSERT_GE(r.accepted_f.size(), 2u);
  for (std::size_t k = 1; k < r.accepted_f.size(); ++k) EXPECT_LE(r.accepted_f[k], r.accepted_f[k - 1]);
  EXPECT_LT(r.f, r.accepted_f.front());
  EXPECT_LE(r.iterations, 5);
  EXPECT_LE(run.gradient_evals, 100 * 5);
  EXPECT_TRUE(Bounds::uniform(4, 400000, 550000).contains(r.x));
}

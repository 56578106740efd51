#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "neuroskin/fe_dynamics.hpp"
#include "neuroskin/membrane.hpp"

namespace neuroskin {

/// (1/N) sum (predicted_i - target_i)^2. Throws ShapeError on length
/// mismatch or empty input.
double mse(std::span<const double> predicted, std::span<const double> target);
double rmse(std::span<const double> predicted, std::span<const double> target);

/// Unnormalized sum over time steps and nodes of squared differences.
double cost_multinode(const Eigen::MatrixXd& simulated, const Eigen::MatrixXd& target);

/// Element j receives x[j / k] with k = n_elements / x.size(). Throws
/// ConfigError unless x.size() divides n_elements.
std::vector<double> expand_parameters(std::span<const double> x, std::size_t n_elements);

enum class ParameterMode {
  ElementModulusGroups,
  NeuronOutputWeights,
};

enum class ObjectiveKind {
  Rmse,       // output node only
  Multinode,  // every tracked node
};

ParameterMode parse_parameter_mode(std::string_view name);
ObjectiveKind parse_objective_kind(std::string_view name);

/// Everything the forward problem needs besides the design vector.
struct ObjectiveSetup {
  MembraneModel model;
  InputSignal inputs;
  double dt = 1.0e-3;
  int steps = 0;
  SimulationOptions simulation;
  ParameterMode mode = ParameterMode::ElementModulusGroups;
  ObjectiveKind kind = ObjectiveKind::Rmse;
  Eigen::MatrixXd target;  // rows = steps + 1, cols = tracked nodes
};

/// Returns the model with `x` written into it according to the parameter mode.
MembraneModel apply_parameters(const ObjectiveSetup& setup, std::span<const double> x);

/// Runs the forward simulation for `x` and scores it against the target.
/// Failures are rethrown as EvaluationError carrying x.
double objective_from_model(const ObjectiveSetup& setup, std::span<const double> x);

}  // namespace neuroskin

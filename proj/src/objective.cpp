#include "neuroskin/objective.hpp"

#include <cmath>
#include <string>

#include "neuroskin/error.hpp"

namespace neuroskin {
namespace {

void check_series(std::span<const double> predicted, std::span<const double> target) {
  if (predicted.size() != target.size())
    throw ShapeError("series lengths differ (" + std::to_string(predicted.size()) + " vs " +
                     std::to_string(target.size()) + ")");
  if (predicted.empty()) throw ShapeError("series are empty");
}

}  // namespace

double mse(std::span<const double> predicted, std::span<const double> target) {
  check_series(predicted, target);
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - target[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predicted.size());
}

double rmse(std::span<const double> predicted, std::span<const double> target) {
  return std::sqrt(mse(predicted, target));
}

double cost_multinode(const Eigen::MatrixXd& simulated, const Eigen::MatrixXd& target) {
  if (simulated.rows() != target.rows() || simulated.cols() != target.cols())
    throw ShapeError("simulated and target arrays have different shapes");
  return (simulated - target).squaredNorm();
}

std::vector<double> expand_parameters(std::span<const double> x, std::size_t n_elements) {
  if (x.empty()) throw ConfigError("parameter vector is empty");
  if (n_elements % x.size() != 0)
    throw ConfigError(std::to_string(x.size()) + " parameter groups do not divide " + std::to_string(n_elements) +
                      " elements");
  const std::size_t block = n_elements / x.size();
  std::vector<double> out(n_elements);
  for (std::size_t j = 0; j < n_elements; ++j) out[j] = x[j / block];
  return out;
}

ParameterMode parse_parameter_mode(std::string_view name) {
  if (name == "modulus_groups") return ParameterMode::ElementModulusGroups;
  if (name == "output_weights") return ParameterMode::NeuronOutputWeights;
  throw ConfigError("unknown parameter mode '" + std::string(name) + "'");
}

ObjectiveKind parse_objective_kind(std::string_view name) {
  if (name == "rmse") return ObjectiveKind::Rmse;
  if (name == "multinode") return ObjectiveKind::Multinode;
  throw ConfigError("unknown objective kind '" + std::string(name) + "'");
}

MembraneModel apply_parameters(const ObjectiveSetup& setup, std::span<const double> x) {
  std::vector<double> values = expand_parameters(x, setup.model.mesh().element_count());
  switch (setup.mode) {
    case ParameterMode::ElementModulusGroups: return setup.model.with_moduli(std::move(values));
    case ParameterMode::NeuronOutputWeights: return setup.model.with_output_weights(values);
  }
  return setup.model;
}

double objective_from_model(const ObjectiveSetup& setup, std::span<const double> x) {
  try {
    const MembraneModel model = apply_parameters(setup, x);
    const SimulationTrace trace = simulate(model, setup.inputs, setup.dt, setup.steps, setup.simulation);
    if (setup.kind == ObjectiveKind::Multinode) return cost_multinode(trace.horizontal, setup.target);
    if (setup.target.rows() != trace.horizontal.rows())
      throw ShapeError("target has " + std::to_string(setup.target.rows()) + " rows, trace has " +
                       std::to_string(trace.horizontal.rows()));
    const Vector out = trace.output();
    const Vector target = setup.target.col(0);
    return rmse(std::span<const double>(out.data(), static_cast<std::size_t>(out.size())),
                std::span<const double>(target.data(), static_cast<std::size_t>(target.size())));
  } catch (const EvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    throw EvaluationError(std::string("objective evaluation failed: ") + e.what(),
                          std::vector<double>(x.begin(), x.end()));
  }
}

}  // namespace neuroskin

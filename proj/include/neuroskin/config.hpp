#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "neuroskin/bounds.hpp"
#include "neuroskin/fe_dynamics.hpp"
#include "neuroskin/gradient.hpp"
#include "neuroskin/lbfgsb.hpp"
#include "neuroskin/membrane.hpp"
#include "neuroskin/objective.hpp"
#include "neuroskin/pso.hpp"

namespace neuroskin {

/// Everything a training run needs. Relative paths are resolved against
/// the directory of the config file. The JSON schema is documented in
/// docs/config.md.
struct TrainingConfig {
  std::filesystem::path base_dir;

  MembraneSpec membrane;

  double dt = 1.0e-3;
  int steps = 200;
  SimulationOptions simulation;
  std::optional<std::filesystem::path> inputs_file;
  double input_amplitude = 1.0;

  ObjectiveKind objective = ObjectiveKind::Rmse;
  std::filesystem::path target_path = "output.out";

  ParameterMode mode = ParameterMode::ElementModulusGroups;
  std::size_t groups = 4;
  Bounds bounds;
  Eigen::VectorXd initial;
  std::optional<Eigen::VectorXd> truth;

  bool pso_enabled = true;
  PsoConfig pso;
  QuasiNewtonOptions lbfgsb;
  GradientOptions gradient;

  std::size_t workers = 1;
  std::uint64_t seed = 0;

  std::filesystem::path result_path = "result.txt";
  std::filesystem::path convergence_path = "convergence.csv";
  std::filesystem::path report_path = "report.json";
  std::filesystem::path trace_path = "trace.out";

  /// Checks cross-field invariants; throws ConfigError.
  void validate() const;
  /// Propagates workers and seed into the PSO and gradient settings.
  void set_workers(std::size_t workers);
  void set_seed(std::uint64_t seed);
};

TrainingConfig parse_training_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
TrainingConfig load_training_config(const std::filesystem::path& path);

/// Worker count after applying the NEUROSKIN_WORKERS environment variable
/// and then an explicit command-line value, in that order of precedence.
std::size_t resolve_workers(std::size_t configured, std::optional<std::size_t> command_line);

MembraneModel build_model(const TrainingConfig& config);
InputSignal load_inputs(const TrainingConfig& config, const MembraneModel& model);
ObjectiveSetup make_objective_setup(const TrainingConfig& config, Eigen::MatrixXd target);

}  // namespace neuroskin

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "neuroskin/config.hpp"
#include "neuroskin/fe_dynamics.hpp"
#include "neuroskin/lbfgsb.hpp"
#include "neuroskin/pso.hpp"

namespace neuroskin {

struct QuasiNewtonIterate {
  int iteration = 0;
  Eigen::VectorXd x;
  double f = 0.0;
};

struct TrainingReport {
  std::vector<PsoHistoryEntry> pso_history;
  std::vector<QuasiNewtonIterate> quasi_newton_history;
  Eigen::VectorXd start;  // where the quasi-Newton phase began
  double start_objective = 0.0;
  Eigen::VectorXd final_parameters;
  double final_objective = 0.0;  // re-evaluated at final_parameters
  StopReason stop_reason = StopReason::MaxIterations;
  int quasi_newton_function_evals = 0;
  std::size_t objective_evaluations = 0;
  double pso_seconds = 0.0;
  double quasi_newton_seconds = 0.0;
  std::string error;  // set when a phase failed and the report is partial
};

/// Forward simulation of the configured model with design vector `x`.
SimulationTrace forward_run(const TrainingConfig& config, const Eigen::VectorXd& x);

/// Simulates at config.truth and writes the tracked-node history to the
/// target path. Returns the written matrix.
Eigen::MatrixXd make_target(const TrainingConfig& config);

/// PSO global phase, then bounded quasi-Newton refinement from the PSO
/// best. Removes any previous result file first, appends every accepted
/// quasi-Newton iterate to it, writes the convergence CSV and the JSON
/// report. On failure the partial report is still written before the
/// exception propagates.
TrainingReport hybrid_train(const TrainingConfig& config);

/// Re-scores every row of a result file (concurrently, config.workers) and
/// rewrites it with the objective appended as a last column. Returns the
/// rewritten table.
Eigen::MatrixXd evaluate_history(const TrainingConfig& config, const std::filesystem::path& history_path);

void write_report(const std::filesystem::path& path, const TrainingReport& report);

}  // namespace neuroskin

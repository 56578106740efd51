#include "neuroskin/trainer.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <span>

#include <json.hpp>

#include "neuroskin/error.hpp"
#include "neuroskin/gradient.hpp"
#include "neuroskin/io.hpp"
#include "neuroskin/objective.hpp"
#include "neuroskin/parallel.hpp"

namespace neuroskin {
namespace {

std::span<const double> view(const Eigen::VectorXd& x) {
  return {x.data(), static_cast<std::size_t>(x.size())};
}

std::vector<double> to_std(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

class ConvergenceLog {
public:
  ConvergenceLog(const std::filesystem::path& path, std::size_t n) : out_(path, std::ios::out | std::ios::trunc) {
    if (!out_) throw Error("cannot open '" + path.string() + "' for writing");
    out_ << "iteration,phase,objective";
    for (std::size_t i = 1; i <= n; ++i) out_ << ",x" << i;
    out_ << '\n';
  }

  void append(int iteration, const char* phase, double objective, const Eigen::VectorXd& x) {
    out_ << iteration << ',' << phase << ',' << format_float(objective);
    for (Eigen::Index i = 0; i < x.size(); ++i) out_ << ',' << format_float(x[i]);
    out_ << '\n';
    out_.flush();
  }

private:
  std::ofstream out_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

SimulationTrace forward_run(const TrainingConfig& config, const Eigen::VectorXd& x) {
  const MembraneModel base = build_model(config);
  const InputSignal inputs = load_inputs(config, base);
  ObjectiveSetup setup{base, inputs, config.dt, config.steps, config.simulation, config.mode, config.objective, {}};
  return simulate(apply_parameters(setup, view(x)), inputs, config.dt, config.steps, config.simulation);
}

Eigen::MatrixXd make_target(const TrainingConfig& config) {
  if (!config.truth) throw ConfigError("make-target needs parameters.truth in the config");
  const SimulationTrace trace = forward_run(config, *config.truth);
  write_matrix(config.target_path, trace.horizontal);
  return trace.horizontal;
}

void write_report(const std::filesystem::path& path, const TrainingReport& report) {
  using nlohmann::json;
  json doc;
  json pso = json::array();
  for (const auto& e : report.pso_history)
    pso.push_back({{"iteration", e.iteration}, {"objective", e.best_fitness}, {"x", to_std(e.best_position)}});
  json qn = json::array();
  for (const auto& e : report.quasi_newton_history)
    qn.push_back({{"iteration", e.iteration}, {"objective", e.f}, {"x", to_std(e.x)}});
  doc["pso_history"] = pso;
  doc["quasi_newton_history"] = qn;
  doc["start"] = to_std(report.start);
  doc["start_objective"] = report.start_objective;
  doc["final_parameters"] = to_std(report.final_parameters);
  doc["final_objective"] = report.final_objective;
  doc["stop_reason"] = std::string(to_string(report.stop_reason));
  doc["quasi_newton_function_evals"] = report.quasi_newton_function_evals;
  doc["objective_evaluations"] = report.objective_evaluations;
  doc["timings"] = {{"pso_seconds", report.pso_seconds}, {"quasi_newton_seconds", report.quasi_newton_seconds}};
  if (!report.error.empty()) doc["error"] = report.error;
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
}

TrainingReport hybrid_train(const TrainingConfig& config) {
  config.validate();
  std::filesystem::remove(config.result_path);

  TrainingReport report;
  std::atomic<std::size_t> evaluations{0};
  try {
    ObjectiveSetup setup = make_objective_setup(config, read_matrix(config.target_path));
    const Objective objective = [&](const Eigen::VectorXd& x) {
      evaluations.fetch_add(1, std::memory_order_relaxed);
      return objective_from_model(setup, view(x));
    };
    ConvergenceLog log(config.convergence_path, config.groups);

    const auto pso_start = std::chrono::steady_clock::now();
    report.start = config.initial;
    if (config.pso_enabled) {
      const PsoResult pso = pso_run(config.pso, objective, [&](const PsoHistoryEntry& entry) {
        log.append(entry.iteration, "pso", entry.best_fitness, entry.best_position);
        report.pso_history.push_back(entry);
      });
      report.start = pso.best_position;
    }
    report.pso_seconds = seconds_since(pso_start);

    const auto qn_start = std::chrono::steady_clock::now();
    int iteration = 0;
    bool logged_start = false;
    const QuasiNewtonResult qn = lbfgsb_minimize(
        [&](const Eigen::VectorXd& x) {
          const GradientResult r = forward_diff_gradient(objective, x, config.gradient, &config.bounds);
          if (!logged_start) {
            report.start_objective = r.f;
            log.append(0, "lbfgsb", r.f, x);
            logged_start = true;
          }
          return ValueAndGradient{r.f, r.g};
        },
        report.start, config.lbfgsb, [&](const Eigen::VectorXd& x, double f) {
          ++iteration;
          log_iterate(config.result_path, view(x));
          log.append(iteration, "lbfgsb", f, x);
          report.quasi_newton_history.push_back({iteration, x, f});
        });
    report.quasi_newton_seconds = seconds_since(qn_start);
    report.stop_reason = qn.reason;
    report.quasi_newton_function_evals = qn.function_evals;
    report.final_parameters = qn.x;
    report.final_objective = objective(qn.x);
    report.objective_evaluations = evaluations.load();
  } catch (const std::exception& e) {
    report.error = e.what();
    report.objective_evaluations = evaluations.load();
    write_report(config.report_path, report);
    throw;
  }
  write_report(config.report_path, report);
  return report;
}

Eigen::MatrixXd evaluate_history(const TrainingConfig& config, const std::filesystem::path& history_path) {
  const auto rows = read_history(history_path, config.groups);
  const ObjectiveSetup setup = make_objective_setup(config, read_matrix(config.target_path));
  const std::vector<double> scores = parallel_map(rows.size(), config.workers, [&](std::size_t r) {
    return objective_from_model(setup, std::span<const double>(rows[r]));
  });
  write_history_with_objective(history_path, rows, scores);

  Eigen::MatrixXd table(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(config.groups) + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < config.groups; ++c)
      table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(config.groups)) = scores[r];
  }
  return table;
}

}  // namespace neuroskin

// neuroskin command-line tool: simulate, make-target, train, evaluate, bench.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "neuroskin/config.hpp"
#include "neuroskin/error.hpp"
#include "neuroskin/gradient.hpp"
#include "neuroskin/io.hpp"
#include "neuroskin/lbfgsb.hpp"
#include "neuroskin/pso.hpp"
#include "neuroskin/trainer.hpp"

namespace {

constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool config_required) {
  auto* config = cmd->add_option("--config", opts.config, "Training/model config (JSON)");
  if (config_required) config->required();
  cmd->add_option("--seed", opts.seed, "RNG seed (overrides the config)");
  cmd->add_option("--workers", opts.workers, "Concurrent evaluations (overrides config and NEUROSKIN_WORKERS)");
}

neuroskin::TrainingConfig load(const CommonOptions& opts) {
  if (!std::filesystem::exists(opts.config)) throw UsageError("config file '" + opts.config + "' not found");
  neuroskin::TrainingConfig cfg = neuroskin::load_training_config(opts.config);
  cfg.set_workers(neuroskin::resolve_workers(cfg.workers, opts.workers));
  if (opts.seed) cfg.set_seed(*opts.seed);
  return cfg;
}

std::string join(const Eigen::VectorXd& x) {
  std::string out;
  for (Eigen::Index i = 0; i < x.size(); ++i) out += (i ? "," : "") + neuroskin::format_float(x[i]);
  return out;
}

int run_bench(const CommonOptions& opts, const std::string& function, int dimension) {
  using namespace neuroskin;
  const std::uint64_t seed = opts.seed.value_or(0);
  const std::size_t workers = resolve_workers(1, opts.workers);
  if (function == "sphere" || function == "all") {
    PsoConfig cfg;
    cfg.bounds = Bounds::uniform(static_cast<std::size_t>(dimension), -5.0, 5.0);
    cfg.particles = 30;
    cfg.max_iterations = 200;
    cfg.seed = seed;
    cfg.workers = workers;
    const auto result = pso_run(cfg, [](const Eigen::VectorXd& x) { return x.squaredNorm(); });
    std::cout << "pso sphere dim=" << dimension << " best=" << format_float(result.best_fitness) << '\n';
  }
  if (function == "rosenbrock" || function == "all") {
    QuasiNewtonOptions opt;
    opt.bounds = Bounds::uniform(2, -2.0, 2.0);
    opt.max_iterations = 500;
    opt.max_function_evals = 2000;
    opt.factr = 10.0;
    opt.pgtol = 1e-10;
    const auto fg = [](const Eigen::VectorXd& x) {
      const double a = 1.0 - x[0];
      const double b = x[1] - x[0] * x[0];
      Eigen::VectorXd g(2);
      g << -2.0 * a - 400.0 * x[0] * b, 200.0 * b;
      return ValueAndGradient{a * a + 100.0 * b * b, g};
    };
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    const auto result = lbfgsb_minimize(fg, x0, opt);
    std::cout << "lbfgsb rosenbrock x=" << join(result.x) << " f=" << format_float(result.f)
              << " iterations=" << result.iterations << " stop=" << to_string(result.reason) << '\n';
  }
  if (function != "sphere" && function != "rosenbrock" && function != "all")
    throw UsageError("unknown bench function '" + function + "'");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neuro-membrane simulation and hybrid PSO / quasi-Newton training"};
  app.require_subcommand(1);

  CommonOptions simulate_opts, target_opts, train_opts, evaluate_opts, bench_opts;
  std::string inputs_path, trace_out, history_path, bench_function = "all";
  std::vector<double> parameters;
  int bench_dimension = 10;

  auto* simulate = app.add_subcommand("simulate", "Run the membrane model on an input signal and write the trace");
  add_common(simulate, simulate_opts, true);
  simulate->add_option("--inputs", inputs_path, "Input signal file (rows = steps, columns = supports)");
  simulate->add_option("--out", trace_out, "Trace output path (default: output.trace from the config)");
  simulate->add_option("--parameters", parameters, "Design vector applied before simulating")->delimiter(',');

  auto* target = app.add_subcommand("make-target", "Forward-simulate at parameters.truth and write the target file");
  add_common(target, target_opts, true);

  auto* train = app.add_subcommand("train", "Hybrid PSO then quasi-Newton training");
  add_common(train, train_opts, true);

  auto* evaluate = app.add_subcommand("evaluate", "Re-score every iterate of a result file");
  add_common(evaluate, evaluate_opts, true);
  evaluate->add_option("--history", history_path, "Result file (default: output.result from the config)");

  auto* bench = app.add_subcommand("bench", "PSO and quasi-Newton on standard test functions");
  add_common(bench, bench_opts, false);
  bench->add_option("--function", bench_function, "sphere, rosenbrock or all");
  bench->add_option("--dimension", bench_dimension, "Sphere dimension")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kUsageError;
  }

  try {
    if (simulate->parsed()) {
      neuroskin::TrainingConfig cfg = load(simulate_opts);
      if (!inputs_path.empty()) cfg.inputs_file = inputs_path;
      Eigen::VectorXd x = cfg.truth.value_or(cfg.initial);
      if (!parameters.empty()) x = Eigen::Map<const Eigen::VectorXd>(parameters.data(), static_cast<Eigen::Index>(parameters.size()));
      const auto trace = neuroskin::forward_run(cfg, x);
      const std::filesystem::path out = trace_out.empty() ? cfg.trace_path : std::filesystem::path(trace_out);
      neuroskin::write_matrix(out, trace.horizontal);
      std::cout << "wrote " << trace.horizontal.rows() << " rows to " << out.string() << '\n';
    } else if (target->parsed()) {
      const neuroskin::TrainingConfig cfg = load(target_opts);
      const auto matrix = neuroskin::make_target(cfg);
      std::cout << "wrote " << matrix.rows() << " rows to " << cfg.target_path.string() << '\n';
    } else if (train->parsed()) {
      const neuroskin::TrainingConfig cfg = load(train_opts);
      const auto report = neuroskin::hybrid_train(cfg);
      std::cout << "start      " << join(report.start) << " f=" << neuroskin::format_float(report.start_objective)
                << '\n'
                << "final      " << join(report.final_parameters)
                << " f=" << neuroskin::format_float(report.final_objective) << '\n'
                << "stop       " << neuroskin::to_string(report.stop_reason) << '\n'
                << "evaluations " << report.objective_evaluations << '\n';
    } else if (evaluate->parsed()) {
      const neuroskin::TrainingConfig cfg = load(evaluate_opts);
      const std::filesystem::path path = history_path.empty() ? cfg.result_path : std::filesystem::path(history_path);
      const auto table = neuroskin::evaluate_history(cfg, path);
      std::cout << "re-scored " << table.rows() << " iterates in " << path.string() << '\n';
    } else if (bench->parsed()) {
      return run_bench(bench_opts, bench_function, bench_dimension);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const neuroskin::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "neuroskin/config.hpp"
#include "neuroskin/error.hpp"
#include "neuroskin/fe_dynamics.hpp"
#include "neuroskin/gradient.hpp"
#include "neuroskin/io.hpp"
#include "neuroskin/lbfgsb.hpp"
#include "neuroskin/objective.hpp"
#include "neuroskin/pso.hpp"
#include "neuroskin/trainer.hpp"

namespace fs = std::filesystem;
using namespace neuroskin;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::span<const double> view(const VectorXd& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }

fs::path work_root() {
  const fs::path dir = fs::temp_directory_path() / "neuroskin_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Demo config with every output redirected into `dir`.
TrainingConfig demo_config(const fs::path& dir, std::size_t workers, std::uint64_t seed) {
  fs::create_directories(dir);
  TrainingConfig c = load_training_config(fs::path(NEUROSKIN_SOURCE_DIR) / "configs" / "demo.json");
  c.target_path = dir / "output.out";
  c.result_path = dir / "result.txt";
  c.convergence_path = dir / "convergence.csv";
  c.report_path = dir / "report.json";
  c.trace_path = dir / "trace.out";
  c.set_workers(workers);
  c.set_seed(seed);
  return c;
}

double max_rel_error(const VectorXd& x, const VectorXd& truth) {
  return ((x - truth).array() / truth.array()).abs().maxCoeff();
}

Outcome criterion_demo(const fs::path& root) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const TrainingConfig c = demo_config(root / "demo_seed7", 4, 7);
  make_target(c);
  const TrainingReport r = hybrid_train(c);
  const double err = max_rel_error(r.final_parameters, *c.truth);
  o.check(err < 0.01, "seed 7 max relative error " + num(err));
  o.note("seed 7 x=(" + format_float(r.final_parameters[0]) + ", " + format_float(r.final_parameters[1]) + ", " +
         format_float(r.final_parameters[2]) + ", " + format_float(r.final_parameters[3]) + ") err " + num(err));
  const double main_seconds = seconds_since(t0);
  o.check(main_seconds < 300.0, "runtime " + num(main_seconds) + " s");
  for (std::uint64_t seed : {11u, 23u}) {
    const TrainingConfig cs = demo_config(root / ("demo_seed" + std::to_string(seed)), 4, seed);
    make_target(cs);
    const TrainingReport rs = hybrid_train(cs);
    const double e = max_rel_error(rs.final_parameters, *cs.truth);
    o.check(e < 0.01, "seed " + std::to_string(seed) + " max relative error " + num(e));
    o.note("seed " + std::to_string(seed) + " err " + num(e));
  }
  o.note("seed 7 run " + num(main_seconds) + " s");
  return o;
}

Outcome criterion_pso() {
  Outcome o;
  PsoConfig c;
  c.bounds = Bounds::uniform(10, -5.0, 5.0);
  c.particles = 30;
  c.max_iterations = 200;
  c.seed = 2024;
  const auto t0 = std::chrono::steady_clock::now();
  const PsoResult r = pso_run(c, [](const VectorXd& x) { return x.squaredNorm(); });
  const double secs = seconds_since(t0);
  bool monotone = r.history.size() == 200;
  for (std::size_t k = 1; k < r.history.size(); ++k)
    monotone = monotone && r.history[k].best_fitness <= r.history[k - 1].best_fitness;
  o.check(monotone, "global best history not non-increasing");
  o.check(r.best_fitness < 1e-3, "final best " + num(r.best_fitness));
  o.check(secs < 5.0, "runtime " + num(secs) + " s");
  o.note("best " + num(r.best_fitness) + " in " + num(secs) + " s");
  return o;
}

Outcome criterion_gradient(const fs::path& root) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();

  const Objective sphere = [](const VectorXd& x) { return x.squaredNorm(); };
  const VectorXd xs = VectorXd::LinSpaced(10, -3.0, 4.0);
  const GradientResult gs = forward_diff_gradient(sphere, xs, GradientOptions{1e-6, StepMode::Absolute, 1});
  const double sphere_err = (gs.g - 2 * xs).cwiseAbs().maxCoeff();
  o.check(sphere_err < 1e-4, "sphere gradient error " + num(sphere_err));

  // Membrane objective against the demo target.
  const TrainingConfig c = demo_config(root / "gradient", 4, 7);
  const ObjectiveSetup setup = make_objective_setup(c, make_target(c));
  const Objective f = [&](const VectorXd& x) { return objective_from_model(setup, view(x)); };
  VectorXd x(4);
  x << 463000.0, 521000.0, 487000.0, 538000.0;
  const double f0 = f(x);

  // Evaluation noise from fixed-point tolerances: second differences at a
  // step far too small for curvature to register.
  double noise = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i) {
    std::vector<double> samples;
    for (int j = -3; j <= 3; ++j) {
      VectorXd xj = x;
      xj[i] += j * 1e-3;
      samples.push_back(j == 0 ? f0 : f(xj));
    }
    for (std::size_t j = 1; j + 1 < samples.size(); ++j)
      noise = std::max(noise, std::abs(samples[j + 1] - 2 * samples[j] + samples[j - 1]) / 4.0);
  }
  noise = std::max(noise, 4 * std::numeric_limits<double>::epsilon() * std::abs(f0));

  // Diagonal curvature from a wide central second difference.
  VectorXd curvature(4);
  for (Eigen::Index i = 0; i < 4; ++i) {
    VectorXd xp = x, xm = x;
    xp[i] += 1000.0;
    xm[i] -= 1000.0;
    curvature[i] = (f(xp) - 2 * f0 + f(xm)) / 1e6;
  }

  double worst_ratio = 0.0;
  for (double delta : {1e-2, 1.0}) {
    const GradientResult fwd = forward_diff_gradient(f, x, GradientOptions{delta, StepMode::Absolute, 4});
    for (Eigen::Index i = 0; i < 4; ++i) {
      VectorXd xp = x, xm = x;
      xp[i] += delta;
      xm[i] -= delta;
      const double central = (f(xp) - f(xm)) / (2 * delta);
      const double bound = 0.5 * delta * std::abs(curvature[i]) * 1.05 + 6.0 * noise / delta;
      const double gap = std::abs(fwd.g[i] - central);
      worst_ratio = std::max(worst_ratio, gap / bound);
      o.check(gap <= bound, "delta " + num(delta) + " component " + std::to_string(i) + " gap " + num(gap) +
                                " > bound " + num(bound));
    }
  }
  const double secs = seconds_since(t0);
  o.check(secs < 60.0, "runtime " + num(secs) + " s");
  o.note("sphere err " + num(sphere_err) + ", membrane worst gap/bound " + num(worst_ratio) + ", noise " +
         num(noise) + ", " + num(secs) + " s");
  return o;
}

MembraneModel plate(int nx, int ny) {
  MembraneSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.output_node_number = 1;
  spec.neuron.activation = ActivationKind::Zero;
  return build_membrane(spec);
}

double patch_error(int nx, int ny) {
  const MembraneModel model = plate(nx, ny);
  const Mesh& mesh = model.mesh();
  const double a0 = 1e-3, bx = 2e-5, cy = -1e-5, d0 = -2e-3, ex = 4e-6, fy = 3e-5;
  std::vector<int> dofs;
  std::vector<double> values;
  const double w = nx * mesh.size, h = ny * mesh.size;
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    const Point p = mesh.nodes[n];
    const bool boundary = p.x == 0.0 || p.y == 0.0 || p.x == w || p.y == h;
    if (!boundary) continue;
    dofs.push_back(static_cast<int>(2 * n));
    values.push_back(a0 + bx * p.x + cy * p.y);
    dofs.push_back(static_cast<int>(2 * n + 1));
    values.push_back(d0 + ex * p.x + fy * p.y);
  }
  Vector u;
  if (dofs.size() == mesh.dof_count()) {
    // Single element: every node is prescribed.
    u.resize(static_cast<Eigen::Index>(mesh.dof_count()));
    for (std::size_t k = 0; k < dofs.size(); ++k) u[dofs[k]] = values[k];
  } else {
    u = solve_static(assemble(model, dofs), values);
  }
  const double e = 500000.0, nu = 0.2, k = e / (1 - nu * nu);
  const Eigen::Vector3d expected(k * (bx + nu * fy), k * (nu * bx + fy), k * (1 - nu) / 2 * (cy + ex));
  double worst = 0.0;
  for (std::size_t el = 0; el < mesh.element_count(); ++el)
    for (double xi : {-1.0, -0.5, 0.0, 0.577, 1.0})
      for (double eta : {-1.0, -0.2, 0.3, 1.0})
        worst = std::max(worst, (element_stress(model, el, u, xi, eta) - expected).norm() / expected.norm());
  return worst;
}

double single_element_tension_error() {
  const MembraneModel model = plate(1, 1);
  const GlobalSystem sys = assemble(model, std::vector<int>{0, 1, 4});
  Vector f = Vector::Zero(8);
  f[2] = f[6] = 3.0 * 10.0 * 50.0 / 2;
  const Vector u = solve_static(sys, std::vector<double>(3, 0.0), f);
  double worst = 0.0;
  for (double xi : {-1.0, 0.0, 1.0})
    for (double eta : {-1.0, 0.0, 1.0})
      worst = std::max(worst, (element_stress(model, 0, u, xi, eta) - Eigen::Vector3d(3, 0, 0)).norm() / 3.0);
  return worst;
}

Outcome criterion_fe() {
  Outcome o;
  const double p1 = std::max(patch_error(1, 1), single_element_tension_error());
  const double p2 = patch_error(2, 2);
  o.check(p1 < 1e-10, "single-element patch error " + num(p1));
  o.check(p2 < 1e-10, "2x2 patch error " + num(p2));

  SparseMatrix k(1, 1);
  k.insert(0, 0) = 1.0;
  const GlobalSystem sdof = GlobalSystem::from_matrices(k, Vector::Ones(1), {});
  NewmarkIntegrator integ(sdof, 2 * std::numbers::pi / 100);
  DynamicState s = DynamicState::zero(1);
  s.u[0] = 1.0;
  s.a = initial_acceleration(sdof, s, Vector{});
  double sdof_err = 0.0;
  for (int n = 0; n < 100; ++n) {
    s = integ.step(s, Vector{}, {});
    sdof_err = std::max(sdof_err, std::abs(s.u[0] - std::cos(s.time)));
  }
  o.check(sdof_err < 0.01, "SDOF deviation " + num(sdof_err));

  MembraneSpec spec;
  spec.neuron.activation = ActivationKind::Zero;
  const MembraneModel model = build_membrane(spec);
  const GlobalSystem sys = assemble(model);
  NewmarkIntegrator plate_integ(sys, 1e-3);
  DynamicState st = DynamicState::zero(sys.dof_count());
  for (std::size_t n = 0; n < model.mesh().node_count(); ++n) {
    const Point p = model.mesh().nodes[n];
    st.u[2 * n] = 0.01 * p.x / 1000 * std::sin(std::numbers::pi * p.y / 500);
    st.u[2 * n + 1] = 0.02 * (p.x / 1000) * (p.x / 1000);
  }
  for (int d : sys.constrained_dofs()) st.u[d] = 0.0;
  st.a = initial_acceleration(sys, st, Vector{});
  const std::vector<double> zeros(sys.constrained_dofs().size(), 0.0);
  const double e0 = mechanical_energy(sys, st);
  double drift = 0.0;
  for (int n = 0; n < 1000; ++n) {
    st = plate_integ.step(st, Vector{}, zeros);
    drift = std::max(drift, std::abs(mechanical_energy(sys, st) - e0) / e0);
  }
  o.check(drift < 0.01, "energy drift " + num(drift));
  o.note("patch " + num(std::max(p1, p2)) + ", SDOF " + num(sdof_err) + ", drift " + num(drift));
  return o;
}

Outcome criterion_quasi_newton() {
  Outcome o;
  QuasiNewtonOptions opt;
  opt.bounds = Bounds::uniform(2, -2.0, 2.0);
  opt.factr = 10.0;
  opt.pgtol = 1e-12;
  opt.max_iterations = 500;
  opt.max_function_evals = 2000;
  bool feasible = true;
  const auto rosen = [](const VectorXd& x) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    VectorXd g(2);
    g << -2 * a - 400 * x[0] * b, 200 * b;
    return ValueAndGradient{a * a + 100 * b * b, g};
  };
  VectorXd x0(2);
  x0 << -1.2, 1.0;
  const QuasiNewtonResult r = lbfgsb_minimize(rosen, x0, opt, [&](const VectorXd& x, double) {
    feasible = feasible && opt.bounds.contains(x);
  });
  const double err = (r.x - VectorXd::Ones(2)).cwiseAbs().maxCoeff();
  o.check(err < 1e-4, "Rosenbrock error " + num(err));

  QuasiNewtonOptions box = opt;
  box.bounds = Bounds::uniform(2, -5.0, 5.0);
  const auto bowl = [](const VectorXd& x) {
    VectorXd g(2);
    g << 2 * (x[0] - 7), 2 * (x[1] + 1);
    return ValueAndGradient{(x[0] - 7) * (x[0] - 7) + (x[1] + 1) * (x[1] + 1), g};
  };
  const QuasiNewtonResult b = lbfgsb_minimize(bowl, VectorXd::Zero(2), box, [&](const VectorXd& x, double) {
    feasible = feasible && box.bounds.contains(x);
  });
  o.check(b.x[0] == 5.0, "active bound ended at " + format_float(b.x[0]));
  o.check(feasible, "an iterate left the box");
  o.note("Rosenbrock err " + num(err) + " in " + std::to_string(r.iterations) + " iterations, bound x=" +
         format_float(b.x[0]));
  return o;
}

Outcome criterion_format(const fs::path& root) {
  Outcome o;
  const fs::path dir = root / "format";
  fs::create_directories(dir);
  log_iterate(dir / "a.txt", std::vector<double>{1.5, 2.0});
  log_iterate(dir / "b.txt", std::vector<double>{450000.0});
  o.check(slurp(dir / "a.txt") == "1.5,2.0\n", "log_iterate(1.5, 2.0) wrote '" + slurp(dir / "a.txt") + "'");
  o.check(slurp(dir / "b.txt") == "450000.0\n", "log_iterate(450000.0) wrote '" + slurp(dir / "b.txt") + "'");

  // The demo run's result file: no trailing commas, exact round trip.
  const TrainingConfig c = demo_config(root / "demo_seed7", 4, 7);
  const fs::path history = c.result_path;
  const std::string text = slurp(history);
  std::istringstream lines(text);
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    ++count;
    o.check(!line.empty() && line.back() != ',' && line.front() != ',', "malformed line '" + line + "'");
  }
  o.check(count > 0 && text.back() == '\n', "demo result.txt empty or unterminated");
  const auto rows = read_history(history, c.groups);

  const Eigen::MatrixXd table = evaluate_history(c, history);
  const auto rescored = read_history(history, c.groups + 1);
  o.check(rescored.size() == rows.size(), "row count changed");
  const ObjectiveSetup setup = make_objective_setup(c, read_matrix(c.target_path));
  bool exact = true;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double sequential = objective_from_model(setup, rows[r]);
    exact = exact && rescored[r].back() == sequential && table(static_cast<Eigen::Index>(r), 4) == sequential;
    for (std::size_t k = 0; k < rows[r].size(); ++k) exact = exact && rescored[r][k] == rows[r][k];
  }
  o.check(exact, "evaluate_history differs from sequential evaluation");
  o.note(std::to_string(count) + " lines, " + std::to_string(c.groups) + " -> " + std::to_string(c.groups + 1) +
         " columns, bit-exact");
  return o;
}

Outcome criterion_determinism(const fs::path& root) {
  Outcome o;
  std::vector<std::pair<std::string, std::string>> runs;
  for (std::size_t workers : {1u, 4u}) {
    const TrainingConfig c = demo_config(root / ("determinism_w" + std::to_string(workers)), workers, 7);
    make_target(c);
    hybrid_train(c);
    runs.emplace_back(slurp(c.result_path), slurp(c.convergence_path));
  }
  const TrainingConfig again = demo_config(root / "determinism_w1", 1, 7);
  hybrid_train(again);
  const std::string repeat = slurp(again.result_path);
  o.check(!runs[0].first.empty(), "empty result.txt");
  o.check(runs[0].first == runs[1].first, "result.txt differs between 1 and 4 workers");
  o.check(runs[0].second == runs[1].second, "convergence log differs between 1 and 4 workers");
  o.check(repeat == runs[0].first, "result.txt differs between repeated runs");
  o.note("3 runs byte-identical");
  return o;
}

}  // namespace

int main() {
  const fs::path root = work_root();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"demo recovery", [&] { return criterion_demo(root); }},
      {"PSO monotonicity and sphere benchmark", [] { return criterion_pso(); }},
      {"gradient fidelity", [&] { return criterion_gradient(root); }},
      {"FE correctness", [] { return criterion_fe(); }},
      {"quasi-Newton", [] { return criterion_quasi_newton(); }},
      {"format fidelity", [&] { return criterion_format(root); }},
      {"determinism", [&] { return criterion_determinism(root); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    failures += outcome.pass ? 0 : 1;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << outcome.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "neuroskin/config.hpp"
#include "neuroskin/error.hpp"
#include "neuroskin/fe_dynamics.hpp"
#include "neuroskin/gradient.hpp"
#include "neuroskin/io.hpp"
#include "neuroskin/lbfgsb.hpp"
#include "neuroskin/membrane.hpp"
#include "neuroskin/objective.hpp"
#include "neuroskin/pso.hpp"
#include "neuroskin/trainer.hpp"

namespace py = pybind11;
using namespace neuroskin;
using Eigen::VectorXd;

namespace {

// Python callables may be invoked from worker threads; the shared_ptr keeps
// reference counting away from threads that do not hold the GIL.
Objective wrap_objective(py::function fn) {
  auto held = std::make_shared<py::function>(std::move(fn));
  return [held](const VectorXd& x) {
    py::gil_scoped_acquire gil;
    return (*held)(x).cast<double>();
  };
}

py::dict report_to_dict(const TrainingReport& r) {
  py::list pso, qn;
  for (const auto& e : r.pso_history)
    pso.append(py::dict(py::arg("iteration") = e.iteration, py::arg("objective") = e.best_fitness,
                        py::arg("x") = e.best_position));
  for (const auto& e : r.quasi_newton_history)
    qn.append(py::dict(py::arg("iteration") = e.iteration, py::arg("objective") = e.f, py::arg("x") = e.x));
  return py::dict(py::arg("pso_history") = pso, py::arg("quasi_newton_history") = qn, py::arg("start") = r.start,
                  py::arg("start_objective") = r.start_objective, py::arg("final_parameters") = r.final_parameters,
                  py::arg("final_objective") = r.final_objective,
                  py::arg("stop_reason") = std::string(to_string(r.stop_reason)),
                  py::arg("objective_evaluations") = r.objective_evaluations);
}

}  // namespace

PYBIND11_MODULE(_neuroskin, m) {
  m.doc() = "Neuro-membrane finite-element model and hybrid PSO / quasi-Newton training.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<AssemblyError>(m, "AssemblyError", base.ptr());
  py::register_exception<StepError>(m, "StepError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<EvaluationError>(m, "EvaluationError", base.ptr());
  py::register_exception<GradientError>(m, "GradientError", base.ptr());

  py::class_<MembraneModel>(m, "MembraneModel")
      .def_property_readonly("node_count", [](const MembraneModel& s) { return s.mesh().node_count(); })
      .def_property_readonly("element_count", [](const MembraneModel& s) { return s.mesh().element_count(); })
      .def_property_readonly("dof_count", [](const MembraneModel& s) { return s.mesh().dof_count(); })
      .def_property_readonly("output_node", [](const MembraneModel& s) { return s.mesh().output_node + 1; })
      .def_property_readonly("supported_nodes",
                             [](const MembraneModel& s) {
                               std::vector<int> out;
                               for (int n : s.mesh().supported_nodes) out.push_back(n + 1);
                               return out;
                             })
      .def_property_readonly("moduli", [](const MembraneModel& s) { return s.material().modulus; })
      .def("with_moduli", &MembraneModel::with_moduli, py::arg("moduli"))
      .def("__repr__", [](const MembraneModel& s) {
        return "<MembraneModel " + std::to_string(s.mesh().nx) + "x" + std::to_string(s.mesh().ny) + ">";
      });

  m.def(
      "build_membrane",
      [](int nx, int ny, double element_size, const std::string& support_edge, int output_node,
         const std::string& activation, double input_weight, double output_weight, double modulus, double poisson,
         double density, double thickness) {
        MembraneSpec spec;
        spec.nx = nx;
        spec.ny = ny;
        spec.size = element_size;
        spec.support_edge = parse_support_edge(support_edge);
        spec.output_node_number = output_node;
        spec.neuron.activation = parse_activation(activation);
        spec.neuron.input_weights.fill(input_weight);
        spec.neuron.output_weight = output_weight;
        spec.modulus = modulus;
        spec.poisson = poisson;
        spec.density = density;
        spec.thickness = thickness;
        return build_membrane(spec);
      },
      py::arg("nx") = 20, py::arg("ny") = 10, py::arg("element_size") = 50.0, py::arg("support_edge") = "left",
      py::arg("output_node") = 126, py::arg("activation") = "symmetric_sigmoid", py::arg("input_weight") = 1.0,
      py::arg("output_weight") = 10.0, py::arg("modulus") = 500000.0, py::arg("poisson") = 0.2,
      py::arg("density") = 1.0e-5, py::arg("thickness") = 10.0,
      "Rectangular membrane; node numbers are 1-based.");

  m.def(
      "activation",
      [](const std::string& kind, double z) { return activation_eval(parse_activation(kind), z); },
      py::arg("kind"), py::arg("z"));

  m.def(
      "element_stiffness",
      [](double modulus, double poisson, double thickness, double size) {
        return Eigen::MatrixXd(element_stiffness(modulus, poisson, thickness, size));
      },
      py::arg("modulus"), py::arg("poisson"), py::arg("thickness"), py::arg("size"));

  m.def(
      "make_demo_inputs",
      [](std::size_t channels, double dt, int steps, double amplitude) {
        return make_demo_inputs(channels, dt, steps, amplitude).values;
      },
      py::arg("channels"), py::arg("dt"), py::arg("steps"), py::arg("amplitude") = 1.0);

  m.def(
      "simulate",
      [](const MembraneModel& model, const Eigen::MatrixXd& inputs, double dt, int steps, double rayleigh_mass,
         double rayleigh_stiffness, const std::vector<int>& tracked_nodes) {
        SimulationOptions opt;
        opt.damping = {rayleigh_mass, rayleigh_stiffness};
        for (int n : tracked_nodes) opt.tracked_nodes.push_back(n - 1);
        py::gil_scoped_release release;
        return simulate(model, InputSignal{inputs}, dt, steps, opt).horizontal;
      },
      py::arg("model"), py::arg("inputs"), py::arg("dt"), py::arg("steps"), py::arg("rayleigh_mass") = 0.0,
      py::arg("rayleigh_stiffness") = 0.0, py::arg("tracked_nodes") = std::vector<int>{},
      "Horizontal displacement history, rows = steps + 1; column 0 is the output node.");

  m.def(
      "mse", [](const std::vector<double>& p, const std::vector<double>& t) { return mse(p, t); }, py::arg("predicted"),
      py::arg("target"));
  m.def(
      "rmse", [](const std::vector<double>& p, const std::vector<double>& t) { return rmse(p, t); },
      py::arg("predicted"), py::arg("target"));
  m.def(
      "expand_parameters",
      [](const std::vector<double>& x, std::size_t n_elements) { return expand_parameters(x, n_elements); },
      py::arg("x"), py::arg("n_elements"));

  m.def(
      "forward_diff_gradient",
      [](py::function f, const VectorXd& x, double delta, bool relative, std::size_t workers) {
        const Objective obj = wrap_objective(std::move(f));
        py::gil_scoped_release release;
        const GradientResult r =
            forward_diff_gradient(obj, x, GradientOptions{delta, relative ? StepMode::Relative : StepMode::Absolute,
                                                          workers});
        return std::make_pair(r.f, r.g);
      },
      py::arg("f"), py::arg("x"), py::arg("delta") = 1.0e-2, py::arg("relative") = false, py::arg("workers") = 1,
      "Returns (f(x), gradient).");

  m.def(
      "pso_minimize",
      [](py::function f, const VectorXd& lower, const VectorXd& upper, int particles, int iterations,
         std::uint64_t seed, double inertia, double cognitive, double social, std::optional<VectorXd> initial,
         std::size_t workers) {
        PsoConfig cfg;
        cfg.bounds = {lower, upper};
        cfg.particles = particles;
        cfg.max_iterations = iterations;
        cfg.seed = seed;
        cfg.inertia = inertia;
        cfg.cognitive = cognitive;
        cfg.social = social;
        cfg.initial_position = std::move(initial);
        cfg.workers = workers;
        const Objective obj = wrap_objective(std::move(f));
        PsoResult r;
        {
          py::gil_scoped_release release;
          r = pso_run(cfg, obj);
        }
        std::vector<double> history;
        for (const auto& e : r.history) history.push_back(e.best_fitness);
        return py::dict(py::arg("x") = r.best_position, py::arg("fun") = r.best_fitness,
                        py::arg("history") = history);
      },
      py::arg("f"), py::arg("lower"), py::arg("upper"), py::arg("particles") = 20, py::arg("iterations") = 50,
      py::arg("seed") = 0, py::arg("inertia") = 0.7, py::arg("cognitive") = 1.5, py::arg("social") = 1.5,
      py::arg("initial") = py::none(), py::arg("workers") = 1);

  m.def(
      "lbfgsb_minimize",
      [](py::function fg, const VectorXd& x0, const VectorXd& lower, const VectorXd& upper, int memory,
         int max_iterations, int max_function_evals, double factr, double pgtol) {
        QuasiNewtonOptions opt;
        opt.bounds = {lower, upper};
        opt.memory = memory;
        opt.max_iterations = max_iterations;
        opt.max_function_evals = max_function_evals;
        opt.factr = factr;
        opt.pgtol = pgtol;
        auto held = std::make_shared<py::function>(std::move(fg));
        const ValueAndGradientFn fn = [held](const VectorXd& x) {
          py::gil_scoped_acquire gil;
          const auto out = (*held)(x).cast<std::pair<double, VectorXd>>();
          return ValueAndGradient{out.first, out.second};
        };
        QuasiNewtonResult r;
        {
          py::gil_scoped_release release;
          r = lbfgsb_minimize(fn, x0, opt);
        }
        return py::dict(py::arg("x") = r.x, py::arg("fun") = r.f, py::arg("jac") = r.g,
                        py::arg("nit") = r.iterations, py::arg("nfev") = r.function_evals,
                        py::arg("stop_reason") = std::string(to_string(r.reason)));
      },
      py::arg("fg"), py::arg("x0"), py::arg("lower"), py::arg("upper"), py::arg("memory") = 10,
      py::arg("max_iterations") = 15000, py::arg("max_function_evals") = 15000, py::arg("factr") = 1.0e7,
      py::arg("pgtol") = 1.0e-5, "fg(x) must return (f, gradient).");

  py::class_<TrainingConfig>(m, "TrainingConfig")
      .def_readonly("groups", &TrainingConfig::groups)
      .def_readonly("steps", &TrainingConfig::steps)
      .def_readonly("dt", &TrainingConfig::dt)
      .def_readonly("workers", &TrainingConfig::workers)
      .def_readonly("seed", &TrainingConfig::seed)
      .def_readonly("initial", &TrainingConfig::initial)
      .def_readonly("truth", &TrainingConfig::truth)
      .def_readonly("target_path", &TrainingConfig::target_path)
      .def_readonly("result_path", &TrainingConfig::result_path)
      .def_readonly("convergence_path", &TrainingConfig::convergence_path)
      .def("set_workers", &TrainingConfig::set_workers, py::arg("workers"))
      .def("set_seed", &TrainingConfig::set_seed, py::arg("seed"));

  m.def("load_config", &load_training_config, py::arg("path"));
  m.def("parse_config", &parse_training_config, py::arg("text"), py::arg("base_dir") = std::filesystem::path{});
  m.def(
      "forward_run",
      [](const TrainingConfig& c, const VectorXd& x) {
        py::gil_scoped_release release;
        return forward_run(c, x).horizontal;
      },
      py::arg("config"), py::arg("x"));
  m.def("make_target", &make_target, py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "train",
      [](const TrainingConfig& c) {
        TrainingReport r;
        {
          py::gil_scoped_release release;
          r = hybrid_train(c);
        }
        return report_to_dict(r);
      },
      py::arg("config"));
  m.def("evaluate_history", &evaluate_history, py::arg("config"), py::arg("history_path"),
        py::call_guard<py::gil_scoped_release>());

  m.def("format_float", &format_float, py::arg("value"));
  m.def(
      "log_iterate",
      [](const std::filesystem::path& path, const std::vector<double>& x) { log_iterate(path, x); },
      py::arg("path"), py::arg("x"));
  m.def("read_history", &read_history, py::arg("path"), py::arg("columns"));
}

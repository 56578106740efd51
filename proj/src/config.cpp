#include "neuroskin/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "neuroskin/error.hpp"
#include "neuroskin/io.hpp"

namespace neuroskin {
namespace {

using nlohmann::json;

void reject_unknown(const json& object, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!object.is_object()) throw ConfigError("'" + std::string(section) + "' must be an object");
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (auto name : allowed) known = known || key == name;
    if (!known) throw ConfigError("unknown key '" + key + "' in '" + std::string(section) + "'");
  }
}

template <class T>
void read(const json& object, const char* key, T& out) {
  if (!object.contains(key)) return;
  try {
    out = object.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

// A number applied to every group, or an array with one entry per group.
Eigen::VectorXd per_group(const json& value, std::size_t groups, const char* key) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(groups));
  if (value.is_number()) {
    out.setConstant(value.get<double>());
    return out;
  }
  if (!value.is_array() || value.size() != groups)
    throw ConfigError(std::string("'") + key + "' must be a number or an array of " + std::to_string(groups) +
                      " numbers");
  for (std::size_t i = 0; i < groups; ++i) {
    if (!value[i].is_number()) throw ConfigError(std::string("'") + key + "' entries must be numbers");
    out[static_cast<Eigen::Index>(i)] = value[i].get<double>();
  }
  return out;
}

}  // namespace

void TrainingConfig::validate() const {
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (groups < 1) throw ConfigError("parameter groups must be at least 1");
  const auto n_elements = static_cast<std::size_t>(membrane.nx) * static_cast<std::size_t>(membrane.ny);
  if (n_elements % groups != 0)
    throw ConfigError(std::to_string(groups) + " parameter groups do not divide " + std::to_string(n_elements) +
                      " elements");
  bounds.validate();
  if (bounds.dimension() != groups) throw ConfigError("bounds dimension must equal the group count");
  if (static_cast<std::size_t>(initial.size()) != groups) throw ConfigError("initial guess dimension mismatch");
  if (!bounds.contains(initial)) throw ConfigError("initial guess lies outside the bounds");
  if (truth && static_cast<std::size_t>(truth->size()) != groups) throw ConfigError("truth dimension mismatch");
  if (!(dt > 0.0) || steps < 1) throw ConfigError("simulation needs dt > 0 and at least one step");
  pso.validate();
  lbfgsb.validate();
  if (!(gradient.delta > 0.0)) throw ConfigError("gradient delta must be positive");
}

void TrainingConfig::set_workers(std::size_t count) {
  workers = count;
  pso.workers = count;
  gradient.workers = std::min(count, groups + 1);
}

void TrainingConfig::set_seed(std::uint64_t value) {
  seed = value;
  pso.seed = value;
}

namespace {

TrainingConfig config_from_json(const json& root, const std::filesystem::path& base_dir) {
  reject_unknown(root, "config",
                 {"membrane", "simulation", "objective", "parameters", "pso", "lbfgsb", "gradient", "workers", "seed",
                  "output"});

  TrainingConfig cfg;
  cfg.base_dir = base_dir;
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  if (root.contains("membrane")) {
    const json& m = root["membrane"];
    reject_unknown(m, "membrane",
                   {"nx", "ny", "element_size", "support_edge", "output_node", "activation", "input_weight",
                    "output_weight", "modulus", "poisson", "density", "thickness"});
    MembraneSpec& spec = cfg.membrane;
    read(m, "nx", spec.nx);
    read(m, "ny", spec.ny);
    read(m, "element_size", spec.size);
    read(m, "output_node", spec.output_node_number);
    if (m.contains("support_edge")) spec.support_edge = parse_support_edge(m["support_edge"].get<std::string>());
    if (m.contains("activation")) spec.neuron.activation = parse_activation(m["activation"].get<std::string>());
    double input_weight = spec.neuron.input_weights[0];
    read(m, "input_weight", input_weight);
    spec.neuron.input_weights.fill(input_weight);
    read(m, "output_weight", spec.neuron.output_weight);
    read(m, "modulus", spec.modulus);
    read(m, "poisson", spec.poisson);
    read(m, "density", spec.density);
    read(m, "thickness", spec.thickness);
  }

  if (root.contains("simulation")) {
    const json& s = root["simulation"];
    reject_unknown(s, "simulation",
                   {"dt", "steps", "rayleigh_mass", "rayleigh_stiffness", "fixed_point_tolerance",
                    "fixed_point_max_iterations", "tracked_nodes", "inputs"});
    read(s, "dt", cfg.dt);
    read(s, "steps", cfg.steps);
    read(s, "rayleigh_mass", cfg.simulation.damping.mass_coeff);
    read(s, "rayleigh_stiffness", cfg.simulation.damping.stiffness_coeff);
    read(s, "fixed_point_tolerance", cfg.simulation.fixed_point.tolerance);
    read(s, "fixed_point_max_iterations", cfg.simulation.fixed_point.max_iterations);
    std::vector<int> tracked;
    read(s, "tracked_nodes", tracked);
    for (int number : tracked) cfg.simulation.tracked_nodes.push_back(number - 1);
    if (s.contains("inputs")) {
      const json& in = s["inputs"];
      reject_unknown(in, "simulation.inputs", {"file", "amplitude"});
      if (in.contains("file")) cfg.inputs_file = resolve(in["file"].get<std::string>());
      read(in, "amplitude", cfg.input_amplitude);
    }
  }

  if (root.contains("objective")) {
    const json& o = root["objective"];
    reject_unknown(o, "objective", {"kind", "target"});
    if (o.contains("kind")) cfg.objective = parse_objective_kind(o["kind"].get<std::string>());
    std::string target = cfg.target_path.string();
    read(o, "target", target);
    cfg.target_path = target;
  }
  cfg.target_path = resolve(cfg.target_path.string());

  json parameters = root.value("parameters", json::object());
  reject_unknown(parameters, "parameters", {"mode", "groups", "lower", "upper", "initial", "truth"});
  if (parameters.contains("mode")) cfg.mode = parse_parameter_mode(parameters["mode"].get<std::string>());
  read(parameters, "groups", cfg.groups);
  if (cfg.groups < 1) throw ConfigError("parameter groups must be at least 1");
  const json lower = parameters.value("lower", json(400000.0));
  const json upper = parameters.value("upper", json(550000.0));
  cfg.bounds = {per_group(lower, cfg.groups, "lower"), per_group(upper, cfg.groups, "upper")};
  cfg.initial = per_group(parameters.value("initial", json(450000.0)), cfg.groups, "initial");
  if (parameters.contains("truth")) cfg.truth = per_group(parameters["truth"], cfg.groups, "truth");

  if (root.contains("pso")) {
    const json& p = root["pso"];
    reject_unknown(p, "pso", {"enabled", "inertia", "cognitive", "social", "particles", "iterations"});
    read(p, "enabled", cfg.pso_enabled);
    read(p, "inertia", cfg.pso.inertia);
    read(p, "cognitive", cfg.pso.cognitive);
    read(p, "social", cfg.pso.social);
    read(p, "particles", cfg.pso.particles);
    read(p, "iterations", cfg.pso.max_iterations);
  }
  cfg.pso.bounds = cfg.bounds;
  cfg.pso.initial_position = cfg.initial;

  if (root.contains("lbfgsb")) {
    const json& q = root["lbfgsb"];
    reject_unknown(q, "lbfgsb", {"memory", "max_iterations", "max_function_evals", "factr", "pgtol"});
    read(q, "memory", cfg.lbfgsb.memory);
    read(q, "max_iterations", cfg.lbfgsb.max_iterations);
    read(q, "max_function_evals", cfg.lbfgsb.max_function_evals);
    read(q, "factr", cfg.lbfgsb.factr);
    read(q, "pgtol", cfg.lbfgsb.pgtol);
  }
  cfg.lbfgsb.bounds = cfg.bounds;

  if (root.contains("gradient")) {
    const json& g = root["gradient"];
    reject_unknown(g, "gradient", {"delta", "mode"});
    read(g, "delta", cfg.gradient.delta);
    if (g.contains("mode")) {
      const auto mode = g["mode"].get<std::string>();
      if (mode == "absolute") cfg.gradient.mode = StepMode::Absolute;
      else if (mode == "relative") cfg.gradient.mode = StepMode::Relative;
      else throw ConfigError("gradient mode must be 'absolute' or 'relative'");
    }
  }

  if (root.contains("output")) {
    const json& o = root["output"];
    reject_unknown(o, "output", {"result", "convergence", "report", "trace"});
    for (auto [key, target] : {std::pair{"result", &cfg.result_path}, std::pair{"convergence", &cfg.convergence_path},
                               std::pair{"report", &cfg.report_path}, std::pair{"trace", &cfg.trace_path}}) {
      std::string value = target->string();
      read(o, key, value);
      *target = value;
    }
  }
  cfg.result_path = resolve(cfg.result_path.string());
  cfg.convergence_path = resolve(cfg.convergence_path.string());
  cfg.report_path = resolve(cfg.report_path.string());
  cfg.trace_path = resolve(cfg.trace_path.string());

  std::size_t workers = 1;
  std::uint64_t seed = 0;
  read(root, "workers", workers);
  read(root, "seed", seed);
  cfg.set_workers(workers);
  cfg.set_seed(seed);
  cfg.validate();
  return cfg;
}

}  // namespace

TrainingConfig parse_training_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return config_from_json(root, base_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

TrainingConfig load_training_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream text;
  text << in.rdbuf();
  return parse_training_config(text.str(), path.parent_path());
}

std::size_t resolve_workers(std::size_t configured, std::optional<std::size_t> command_line) {
  std::size_t workers = configured;
  if (const char* env = std::getenv("NEUROSKIN_WORKERS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long value = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || value < 1) throw ConfigError("NEUROSKIN_WORKERS must be a positive integer");
    workers = static_cast<std::size_t>(value);
  }
  if (command_line) {
    if (*command_line < 1) throw ConfigError("--workers must be at least 1");
    workers = *command_line;
  }
  return workers;
}

MembraneModel build_model(const TrainingConfig& config) { return build_membrane(config.membrane); }

InputSignal load_inputs(const TrainingConfig& config, const MembraneModel& model) {
  if (config.inputs_file) return InputSignal{read_matrix(*config.inputs_file)};
  return make_demo_inputs(model.mesh().supported_nodes.size(), config.dt, config.steps, config.input_amplitude);
}

ObjectiveSetup make_objective_setup(const TrainingConfig& config, Eigen::MatrixXd target) {
  MembraneModel model = build_model(config);
  InputSignal inputs = load_inputs(config, model);
  const auto expected_rows = static_cast<Eigen::Index>(config.steps) + 1;
  if (target.rows() != expected_rows)
    throw ShapeError("target has " + std::to_string(target.rows()) + " rows, expected " +
                     std::to_string(expected_rows));
  const auto expected_cols = static_cast<Eigen::Index>(1 + config.simulation.tracked_nodes.size());
  if (config.objective == ObjectiveKind::Multinode && target.cols() != expected_cols)
    throw ShapeError("multinode target needs " + std::to_string(expected_cols) + " columns");
  return ObjectiveSetup{std::move(model), std::move(inputs), config.dt, config.steps, config.simulation,
                        config.mode, config.objective, std::move(target)};
}

}  // namespace neuroskin

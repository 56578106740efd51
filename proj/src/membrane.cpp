#include "neuroskin/membrane.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "neuroskin/error.hpp"

namespace neuroskin {

ActivationKind parse_activation(std::string_view name) {
  if (name == "symmetric_sigmoid" || name == "tanh") return ActivationKind::SymmetricSigmoid;
  if (name == "linear_saturating" || name == "linear") return ActivationKind::LinearSaturating;
  if (name == "zero" || name == "none") return ActivationKind::Zero;
  throw ConfigError("unknown activation kind '" + std::string(name) + "'");
}

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::SymmetricSigmoid: return "symmetric_sigmoid";
    case ActivationKind::LinearSaturating: return "linear_saturating";
    case ActivationKind::Zero: return "zero";
  }
  return "unknown";
}

double activation_eval(ActivationKind kind, double z) {
  if (!std::isfinite(z)) throw DomainError("activation input is not finite");
  switch (kind) {
    case ActivationKind::SymmetricSigmoid: return std::tanh(z);
    case ActivationKind::LinearSaturating: return std::clamp(z, -1.0, 1.0);
    case ActivationKind::Zero: return 0.0;
  }
  return 0.0;
}

double neuron_potential(const Neuron& neuron, std::span<const double, 4> u_horizontal) {
  double z = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (!std::isfinite(u_horizontal[i])) throw DomainError("neuron input displacement is not finite");
    z += neuron.input_weights[i] * u_horizontal[i];
  }
  return z;
}

SupportEdge parse_support_edge(std::string_view name) {
  if (name == "left") return SupportEdge::Left;
  if (name == "right") return SupportEdge::Right;
  if (name == "bottom") return SupportEdge::Bottom;
  if (name == "top") return SupportEdge::Top;
  throw ConfigError("unknown support edge '" + std::string(name) + "'");
}

Mesh build_mesh(int nx, int ny, double size, SupportEdge support_edge, int output_node_number) {
  if (nx < 1 || ny < 1) throw ConfigError("mesh needs at least one element in each direction");
  if (!(size > 0.0) || !std::isfinite(size)) throw ConfigError("element size must be positive");

  Mesh mesh;
  mesh.nx = nx;
  mesh.ny = ny;
  mesh.size = size;
  const int row = nx + 1;
  const int node_count = row * (ny + 1);
  if (output_node_number < 1 || output_node_number > node_count) {
    throw ConfigError("output node " + std::to_string(output_node_number) + " outside 1.." +
                      std::to_string(node_count));
  }

  mesh.nodes.reserve(static_cast<std::size_t>(node_count));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) mesh.nodes.push_back({i * size, j * size});

  mesh.elements.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int n = j * row + i;
      mesh.elements.push_back({n, n + 1, n + 1 + row, n + row});
    }
  }

  switch (support_edge) {
    case SupportEdge::Left:
      for (int j = 0; j <= ny; ++j) mesh.supported_nodes.push_back(j * row);
      break;
    case SupportEdge::Right:
      for (int j = 0; j <= ny; ++j) mesh.supported_nodes.push_back(j * row + nx);
      break;
    case SupportEdge::Bottom:
      for (int i = 0; i <= nx; ++i) mesh.supported_nodes.push_back(i);
      break;
    case SupportEdge::Top:
      for (int i = 0; i <= nx; ++i) mesh.supported_nodes.push_back(ny * row + i);
      break;
  }
  mesh.output_node = output_node_number - 1;
  return mesh;
}

MembraneModel::MembraneModel(Mesh mesh, std::vector<Neuron> neurons, MaterialField material)
    : mesh_(std::move(mesh)), neurons_(std::move(neurons)), material_(std::move(material)) {
  validate();
}

void MembraneModel::validate() const {
  const auto n_nodes = static_cast<int>(mesh_.node_count());
  if (neurons_.size() != mesh_.element_count())
    throw ConfigError("neuron count must equal element count");
  if (material_.modulus.size() != mesh_.element_count())
    throw ConfigError("modulus field length must equal element count");
  for (double e : material_.modulus)
    if (!(e > 0.0) || !std::isfinite(e)) throw DomainError("element modulus must be positive and finite");
  if (!(material_.poisson >= 0.0 && material_.poisson < 0.5))
    throw DomainError("Poisson ratio must lie in [0, 0.5)");
  if (!(material_.density > 0.0)) throw DomainError("density must be positive");
  if (!(material_.thickness > 0.0)) throw DomainError("thickness must be positive");
  for (const auto& el : mesh_.elements) {
    for (int a = 0; a < 4; ++a) {
      if (el[a] < 0 || el[a] >= n_nodes) throw ConfigError("element node id out of range");
      for (int b = a + 1; b < 4; ++b)
        if (el[a] == el[b]) throw ConfigError("element has repeated node ids");
    }
  }
  for (int n : mesh_.supported_nodes)
    if (n < 0 || n >= n_nodes) throw ConfigError("supported node id out of range");
  if (mesh_.output_node < 0 || mesh_.output_node >= n_nodes)
    throw ConfigError("output node id out of range");
  for (const auto& neuron : neurons_)
    for (double w : neuron.input_weights)
      if (!std::isfinite(w)) throw DomainError("neuron input weight is not finite");
}

MembraneModel MembraneModel::with_moduli(std::vector<double> moduli) const {
  MaterialField material = material_;
  material.modulus = std::move(moduli);
  return MembraneModel(mesh_, neurons_, std::move(material));
}

MembraneModel MembraneModel::with_output_weights(std::span<const double> weights) const {
  if (weights.size() != neurons_.size()) throw ConfigError("output weight count must equal element count");
  std::vector<Neuron> neurons = neurons_;
  for (std::size_t e = 0; e < neurons.size(); ++e) neurons[e].output_weight = weights[e];
  return MembraneModel(mesh_, std::move(neurons), material_);
}

MembraneModel MembraneModel::with_neurons(std::vector<Neuron> neurons) const {
  return MembraneModel(mesh_, std::move(neurons), material_);
}

bool MembraneModel::neurons_active() const {
  return std::any_of(neurons_.begin(), neurons_.end(), [](const Neuron& n) {
    return n.activation != ActivationKind::Zero && n.output_weight != 0.0;
  });
}

MembraneModel build_membrane(const MembraneSpec& spec) {
  Mesh mesh = build_mesh(spec.nx, spec.ny, spec.size, spec.support_edge, spec.output_node_number);
  const std::size_t n_elements = mesh.element_count();
  MaterialField material;
  material.modulus.assign(n_elements, spec.modulus);
  material.poisson = spec.poisson;
  material.density = spec.density;
  material.thickness = spec.thickness;
  return MembraneModel(std::move(mesh), std::vector<Neuron>(n_elements, spec.neuron), std::move(material));
}

std::array<double, 4> element_traction_forces(const MembraneModel& model, std::size_t element,
                                              std::span<const double, 4> u_horizontal) {
  if (element >= model.mesh().element_count())
    throw LookupError("element " + std::to_string(element) + " does not exist");
  const Neuron& neuron = model.neurons()[element];
  const double z = neuron_potential(neuron, u_horizontal);
  const double nodal =
      activation_eval(neuron.activation, z) * neuron.output_weight * model.mesh().element_area() / 4.0;
  return {nodal, nodal, nodal, nodal};
}

}  // namespace neuroskin

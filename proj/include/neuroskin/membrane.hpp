#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace neuroskin {

enum class ActivationKind {
  SymmetricSigmoid,  // tanh
  LinearSaturating,  // clamp(z, -1, 1)
  Zero,              // neuron disabled
};

ActivationKind parse_activation(std::string_view name);
std::string_view to_string(ActivationKind kind);

/// Evaluates the activation. Every kind maps R -> [-1, 1], is non-decreasing
/// and maps 0 to 0. Throws DomainError for non-finite z.
double activation_eval(ActivationKind kind, double z);

/// Neuron housed in one element. Input weights act on the horizontal
/// displacement of the element's 4 nodes (in connectivity order).
struct Neuron {
  std::array<double, 4> input_weights{1.0, 1.0, 1.0, 1.0};
  ActivationKind activation = ActivationKind::SymmetricSigmoid;
  double output_weight = 10.0;  // MPa
};

/// z = sum_i w_i * u_i. Throws DomainError on non-finite displacements.
double neuron_potential(const Neuron& neuron, std::span<const double, 4> u_horizontal);

enum class SupportEdge { Left, Right, Bottom, Top };

SupportEdge parse_support_edge(std::string_view name);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Rectangular mesh of square 4-node elements.
///
/// Nodes are numbered row-major: node index j*(nx+1)+i sits at
/// (i*size, j*size), so rows run along the x (length) direction. Element
/// index j*nx+i has corners {n, n+1, n+1+(nx+1), n+(nx+1)} with n = j*(nx+1)+i,
/// i.e. counterclockwise from the lower-left corner. All indices stored here
/// are 0-based; the 1-based "node number" used by configs and the CLI is
/// index + 1.
struct Mesh {
  int nx = 0;
  int ny = 0;
  double size = 0.0;
  std::vector<Point> nodes;
  std::vector<std::array<int, 4>> elements;
  std::vector<int> supported_nodes;
  int output_node = 0;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t element_count() const { return elements.size(); }
  std::size_t dof_count() const { return 2 * nodes.size(); }
  double element_area() const { return size * size; }
};

/// Elastic properties. Units: mm, N, MPa, tonne/mm^3.
struct MaterialField {
  std::vector<double> modulus;  // per element
  double poisson = 0.2;
  double density = 1.0e-5;
  double thickness = 10.0;
};

/// Mesh + one neuron per element + material. Treated as immutable once
/// built; the `with_*` helpers return modified copies.
class MembraneModel {
public:
  MembraneModel(Mesh mesh, std::vector<Neuron> neurons, MaterialField material);

  const Mesh& mesh() const { return mesh_; }
  const std::vector<Neuron>& neurons() const { return neurons_; }
  const MaterialField& material() const { return material_; }

  MembraneModel with_moduli(std::vector<double> moduli) const;
  MembraneModel with_output_weights(std::span<const double> weights) const;
  MembraneModel with_neurons(std::vector<Neuron> neurons) const;

  bool neurons_active() const;

private:
  void validate() const;

  Mesh mesh_;
  std::vector<Neuron> neurons_;
  MaterialField material_;
};

struct MembraneSpec {
  int nx = 20;
  int ny = 10;
  double size = 50.0;
  SupportEdge support_edge = SupportEdge::Left;
  int output_node_number = 126;  // 1-based
  Neuron neuron{};
  double modulus = 500000.0;
  double poisson = 0.2;
  double density = 1.0e-5;
  double thickness = 10.0;
};

Mesh build_mesh(int nx, int ny, double size, SupportEdge support_edge, int output_node_number);

/// Builds the rectangular neuro-membrane with uniform default neurons and a
/// uniform modulus. Throws ConfigError for degenerate dimensions or an
/// out-of-range output node.
MembraneModel build_membrane(const MembraneSpec& spec);

/// Horizontal nodal forces from one element's neuron:
/// f(z) * w_o * area / 4 at each of the element's 4 nodes.
std::array<double, 4> element_traction_forces(const MembraneModel& model, std::size_t element,
                                              std::span<const double, 4> u_horizontal);

}  // namespace neuroskin

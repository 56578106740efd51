#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "neuroskin/membrane.hpp"

namespace neuroskin {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using ElementMatrix = Eigen::Matrix<double, 8, 8>;

/// Plane-stress stiffness of a square bilinear quadrilateral, 2x2 Gauss
/// quadrature. DOF order is (u0, v0, u1, v1, u2, v2, u3, v3) with the
/// nodes counterclockwise from the lower-left corner.
ElementMatrix element_stiffness(double modulus, double poisson, double thickness, double size);

/// Plane-stress stress (sxx, syy, sxy) inside `element` at natural
/// coordinates (xi, eta) in [-1, 1]^2.
Eigen::Vector3d element_stress(const MembraneModel& model, std::size_t element, const Vector& displacement,
                               double xi, double eta);

struct RayleighDamping {
  double mass_coeff = 0.0;       // a0
  double stiffness_coeff = 0.0;  // a1
};

/// Global K, lumped M and Rayleigh coefficients with the constrained DOFs
/// flagged. Constrained DOFs are kept in the matrices; solvers partition.
class GlobalSystem {
public:
  /// Generic constructor used for hand-built systems. `mass` is the
  /// diagonal of M. Throws AssemblyError if K restricted to the free DOFs
  /// is not positive definite.
  static GlobalSystem from_matrices(SparseMatrix stiffness, Vector mass, std::vector<int> constrained_dofs,
                                    RayleighDamping damping = {});

  const SparseMatrix& stiffness() const { return stiffness_; }
  const Vector& mass() const { return mass_; }
  const RayleighDamping& damping() const { return damping_; }
  const std::vector<int>& free_dofs() const { return free_dofs_; }
  const std::vector<int>& constrained_dofs() const { return constrained_dofs_; }
  /// Position of `dof` among the free DOFs, or -1 if constrained.
  int free_index(int dof) const { return free_index_[static_cast<std::size_t>(dof)]; }
  std::size_t dof_count() const { return mass_.size(); }

  /// Returns the rows/columns of `matrix` selected by (rows free?, cols free?).
  SparseMatrix partition(const SparseMatrix& matrix, bool free_rows, bool free_cols) const;

private:
  GlobalSystem() = default;

  SparseMatrix stiffness_;
  Vector mass_;
  RayleighDamping damping_;
  std::vector<int> free_dofs_;
  std::vector<int> constrained_dofs_;
  std::vector<int> free_index_;
};

/// DOFs fixed by the mesh supports: (2n, 2n+1) for each supported node n, in
/// support order. Horizontal DOF first.
std::vector<int> support_dofs(const Mesh& mesh);

/// Assembles K and the equal-quarter lumped mass. Throws AssemblyError when
/// the supports leave a rigid-body mode.
GlobalSystem assemble(const MembraneModel& model, RayleighDamping damping = {});
GlobalSystem assemble(const MembraneModel& model, std::vector<int> constrained_dofs, RayleighDamping damping = {});

/// Sum of all element neuron tractions scattered onto the horizontal DOFs.
Vector neuro_force_vector(const MembraneModel& model, const Vector& displacement);

struct DynamicState {
  double time = 0.0;
  Vector u;
  Vector v;
  Vector a;

  static DynamicState zero(std::size_t dofs);
};

/// Displacement-dependent force added on top of the external load. Empty
/// means a linear system.
using FeedbackForce = std::function<Vector(const Vector&)>;

struct FixedPointOptions {
  double tolerance = 1.0e-8;  // relative change of the feedback force
  int max_iterations = 50;
};

/// Average-acceleration Newmark (beta = 1/4, gamma = 1/2) with a Picard
/// iteration on the feedback force inside every step. The effective
/// stiffness is factored once at construction.
class NewmarkIntegrator {
public:
  NewmarkIntegrator(const GlobalSystem& system, double dt, FeedbackForce feedback = {},
                    FixedPointOptions options = {});

  /// Advances one step. `external` is the load at t + dt over all DOFs
  /// (empty = zero); `prescribed` holds the values of the constrained DOFs
  /// at t + dt, in `constrained_dofs()` order. Throws StepError if the
  /// fixed-point iteration stalls.
  DynamicState step(const DynamicState& state, const Vector& external, std::span<const double> prescribed) const;

  double dt() const { return dt_; }

private:
  const GlobalSystem* system_;
  double dt_;
  FeedbackForce feedback_;
  FixedPointOptions options_;
  SparseMatrix damping_matrix_;
  SparseMatrix effective_fc_;
  Eigen::SimplicialLDLT<SparseMatrix> factor_;
};

/// One-off step; prefer NewmarkIntegrator when stepping repeatedly.
DynamicState newmark_step(const GlobalSystem& system, const DynamicState& state, double dt, const Vector& external,
                          std::span<const double> prescribed, const FeedbackForce& feedback = {},
                          FixedPointOptions options = {});

/// Solves M a = f - K u - C v (+ feedback) on the free DOFs; constrained
/// accelerations are left at zero.
Vector initial_acceleration(const GlobalSystem& system, const DynamicState& state, const Vector& external,
                            const FeedbackForce& feedback = {});

/// 0.5 v'Mv + 0.5 u'Ku.
double mechanical_energy(const GlobalSystem& system, const DynamicState& state);

/// Static equilibrium K u = f_ext + feedback(u) with the constrained DOFs
/// held at `prescribed`, solved by Picard iteration.
Vector solve_static(const GlobalSystem& system, std::span<const double> prescribed, const Vector& external = {},
                    const FeedbackForce& feedback = {}, FixedPointOptions options = {});

/// Prescribed horizontal displacement histories at the supported nodes.
/// Row k holds the values at t = (k+1)*dt; the state at t = 0 is at rest.
struct InputSignal {
  Eigen::MatrixXd values;  // rows = steps, cols = channels

  Eigen::Index steps() const { return values.rows(); }
  Eigen::Index channels() const { return values.cols(); }
};

/// Deterministic multi-sine excitation with a per-channel amplitude and
/// phase, ramped in over the first quarter of the record.
InputSignal make_demo_inputs(std::size_t channels, double dt, int steps, double amplitude = 1.0);

struct SimulationOptions {
  RayleighDamping damping;
  FixedPointOptions fixed_point;
  /// Extra nodes to record (0-based) after the output node.
  std::vector<int> tracked_nodes;
};

struct SimulationTrace {
  std::vector<double> time;
  std::vector<int> nodes;       // column order; nodes[0] is the output node
  Eigen::MatrixXd horizontal;   // rows = steps + 1

  Vector output() const { return horizontal.col(0); }
};

/// Transient response from rest. Throws ShapeError if the input signal does
/// not have `steps` rows and one column per supported node.
SimulationTrace simulate(const MembraneModel& model, const InputSignal& inputs, double dt, int steps,
                         const SimulationOptions& options = {});

}  // namespace neuroskin

#include "neuroskin/fe_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "neuroskin/error.hpp"

namespace neuroskin {
namespace {

constexpr std::array<double, 4> kNodeXi{-1.0, 1.0, 1.0, -1.0};
constexpr std::array<double, 4> kNodeEta{-1.0, -1.0, 1.0, 1.0};

Eigen::Matrix3d plane_stress_matrix(double modulus, double poisson) {
  const double c = modulus / (1.0 - poisson * poisson);
  Eigen::Matrix3d d;
  d << c, c * poisson, 0.0,
       c * poisson, c, 0.0,
       0.0, 0.0, c * (1.0 - poisson) / 2.0;
  return d;
}

// Strain-displacement matrix of a square element of edge `size`.
Eigen::Matrix<double, 3, 8> strain_displacement(double size, double xi, double eta) {
  Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
  const double to_physical = 2.0 / size;
  for (int a = 0; a < 4; ++a) {
    const double dndx = 0.25 * kNodeXi[a] * (1.0 + eta * kNodeEta[a]) * to_physical;
    const double dndy = 0.25 * kNodeEta[a] * (1.0 + xi * kNodeXi[a]) * to_physical;
    b(0, 2 * a) = dndx;
    b(1, 2 * a + 1) = dndy;
    b(2, 2 * a) = dndy;
    b(2, 2 * a + 1) = dndx;
  }
  return b;
}

void check_material(double modulus, double poisson, double thickness, double size) {
  if (!(modulus > 0.0) || !std::isfinite(modulus)) throw DomainError("modulus must be positive");
  if (!(poisson >= 0.0 && poisson < 0.5)) throw DomainError("Poisson ratio must lie in [0, 0.5)");
  if (!(thickness > 0.0)) throw DomainError("thickness must be positive");
  if (!(size > 0.0)) throw DomainError("element size must be positive");
}

std::array<int, 8> element_dofs(const std::array<int, 4>& nodes) {
  std::array<int, 8> dofs{};
  for (int a = 0; a < 4; ++a) {
    dofs[2 * a] = 2 * nodes[a];
    dofs[2 * a + 1] = 2 * nodes[a] + 1;
  }
  return dofs;
}

Vector free_part(const GlobalSystem& system, const Vector& full) {
  Vector out(system.free_dofs().size());
  for (std::size_t i = 0; i < system.free_dofs().size(); ++i) out[i] = full[system.free_dofs()[i]];
  return out;
}

}  // namespace

ElementMatrix element_stiffness(double modulus, double poisson, double thickness, double size) {
  check_material(modulus, poisson, thickness, size);
  const Eigen::Matrix3d d = plane_stress_matrix(modulus, poisson);
  const double gauss = 1.0 / std::sqrt(3.0);
  const double det_j = size * size / 4.0;
  ElementMatrix k = ElementMatrix::Zero();
  for (double xi : {-gauss, gauss}) {
    for (double eta : {-gauss, gauss}) {
      const auto b = strain_displacement(size, xi, eta);
      k.noalias() += thickness * det_j * (b.transpose() * d * b);
    }
  }
  // Symmetrize away the roundoff of the product.
  return 0.5 * (k + k.transpose());
}

Eigen::Vector3d element_stress(const MembraneModel& model, std::size_t element, const Vector& displacement,
                               double xi, double eta) {
  const Mesh& mesh = model.mesh();
  if (element >= mesh.element_count()) throw LookupError("element " + std::to_string(element) + " does not exist");
  if (static_cast<std::size_t>(displacement.size()) != mesh.dof_count())
    throw ShapeError("displacement length does not match DOF count");
  Eigen::Matrix<double, 8, 1> ue;
  const auto dofs = element_dofs(mesh.elements[element]);
  for (int i = 0; i < 8; ++i) ue[i] = displacement[dofs[i]];
  const auto d = plane_stress_matrix(model.material().modulus[element], model.material().poisson);
  return d * (strain_displacement(mesh.size, xi, eta) * ue);
}

GlobalSystem GlobalSystem::from_matrices(SparseMatrix stiffness, Vector mass, std::vector<int> constrained_dofs,
                                         RayleighDamping damping) {
  const auto n = static_cast<int>(mass.size());
  if (stiffness.rows() != n || stiffness.cols() != n) throw ShapeError("stiffness and mass sizes differ");
  for (int i = 0; i < n; ++i)
    if (!(mass[i] > 0.0)) throw AssemblyError("lumped mass entries must be positive");

  GlobalSystem system;
  system.free_index_.assign(static_cast<std::size_t>(n), 0);
  for (int dof : constrained_dofs) {
    if (dof < 0 || dof >= n) throw ConfigError("constrained DOF out of range");
    if (system.free_index_[dof] != 0) throw ConfigError("constrained DOF listed twice");
    system.free_index_[dof] = -1;
  }
  for (int dof = 0; dof < n; ++dof) {
    if (system.free_index_[dof] == -1) continue;
    system.free_index_[dof] = static_cast<int>(system.free_dofs_.size());
    system.free_dofs_.push_back(dof);
  }
  if (system.free_dofs_.empty()) throw AssemblyError("every DOF is constrained");

  stiffness.makeCompressed();
  system.stiffness_ = std::move(stiffness);
  system.mass_ = std::move(mass);
  system.damping_ = damping;
  system.constrained_dofs_ = std::move(constrained_dofs);

  const SparseMatrix kff = system.partition(system.stiffness_, true, true);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(kff);
  if (ldlt.info() != Eigen::Success) throw AssemblyError("free-DOF stiffness factorization failed");
  const Vector pivots = ldlt.vectorD();
  const double scale = pivots.cwiseAbs().maxCoeff();
  if (!(pivots.minCoeff() > 1.0e-10 * scale))
    throw AssemblyError("free-DOF stiffness is singular; supports leave a rigid-body mode");
  return system;
}

SparseMatrix GlobalSystem::partition(const SparseMatrix& matrix, bool free_rows, bool free_cols) const {
  std::vector<int> constrained_index(free_index_.size(), -1);
  for (std::size_t i = 0; i < constrained_dofs_.size(); ++i)
    constrained_index[constrained_dofs_[i]] = static_cast<int>(i);
  auto map = [&](int dof, bool want_free) {
    return want_free ? free_index_[dof] : constrained_index[dof];
  };
  const auto rows = static_cast<Eigen::Index>(free_rows ? free_dofs_.size() : constrained_dofs_.size());
  const auto cols = static_cast<Eigen::Index>(free_cols ? free_dofs_.size() : constrained_dofs_.size());

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(matrix.nonZeros()));
  for (int col = 0; col < matrix.outerSize(); ++col) {
    const int c = map(col, free_cols);
    if (c < 0) continue;
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
      const int r = map(static_cast<int>(it.row()), free_rows);
      if (r >= 0) triplets.emplace_back(r, c, it.value());
    }
  }
  SparseMatrix out(rows, cols);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

std::vector<int> support_dofs(const Mesh& mesh) {
  std::vector<int> dofs;
  dofs.reserve(2 * mesh.supported_nodes.size());
  for (int node : mesh.supported_nodes) {
    dofs.push_back(2 * node);
    dofs.push_back(2 * node + 1);
  }
  return dofs;
}

GlobalSystem assemble(const MembraneModel& model, RayleighDamping damping) {
  return assemble(model, support_dofs(model.mesh()), damping);
}

GlobalSystem assemble(const MembraneModel& model, std::vector<int> constrained_dofs, RayleighDamping damping) {
  const Mesh& mesh = model.mesh();
  const MaterialField& material = model.material();
  const auto n = static_cast<Eigen::Index>(mesh.dof_count());

  // Element stiffness is linear in E, so one unit-modulus matrix serves all elements.
  const ElementMatrix unit = element_stiffness(1.0, material.poisson, material.thickness, mesh.size);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.element_count() * 64);
  Vector mass = Vector::Zero(n);
  const double quarter_mass = material.density * material.thickness * mesh.element_area() / 4.0;

  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto dofs = element_dofs(mesh.elements[e]);
    const double modulus = material.modulus[e];
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) triplets.emplace_back(dofs[i], dofs[j], modulus * unit(i, j));
    for (int dof : dofs) mass[dof] += quarter_mass;
  }
  SparseMatrix k(n, n);
  k.setFromTriplets(triplets.begin(), triplets.end());
  return GlobalSystem::from_matrices(std::move(k), std::move(mass), std::move(constrained_dofs), damping);
}

Vector neuro_force_vector(const MembraneModel& model, const Vector& displacement) {
  const Mesh& mesh = model.mesh();
  if (static_cast<std::size_t>(displacement.size()) != mesh.dof_count())
    throw ShapeError("displacement length does not match DOF count");
  Vector force = Vector::Zero(displacement.size());
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    if (model.neurons()[e].activation == ActivationKind::Zero) continue;
    const auto& nodes = mesh.elements[e];
    const std::array<double, 4> u{displacement[2 * nodes[0]], displacement[2 * nodes[1]],
                                  displacement[2 * nodes[2]], displacement[2 * nodes[3]]};
    const auto f = element_traction_forces(model, e, u);
    for (int a = 0; a < 4; ++a) force[2 * nodes[a]] += f[a];
  }
  return force;
}

DynamicState DynamicState::zero(std::size_t dofs) {
  const auto n = static_cast<Eigen::Index>(dofs);
  return {0.0, Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
}

NewmarkIntegrator::NewmarkIntegrator(const GlobalSystem& system, double dt, FeedbackForce feedback,
                                     FixedPointOptions options)
    : system_(&system), dt_(dt), feedback_(std::move(feedback)), options_(options) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("time step must be positive");
  if (options_.max_iterations < 1) throw ConfigError("fixed-point iteration limit must be at least 1");

  const auto n = static_cast<Eigen::Index>(system.dof_count());
  SparseMatrix mass(n, n);
  {
    std::vector<Eigen::Triplet<double>> diag;
    diag.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) diag.emplace_back(i, i, system.mass()[i]);
    mass.setFromTriplets(diag.begin(), diag.end());
  }
  damping_matrix_ = system.damping().mass_coeff * mass + system.damping().stiffness_coeff * system.stiffness();
  const double c0 = 4.0 / (dt * dt);
  const double c2 = 2.0 / dt;
  const SparseMatrix effective = SparseMatrix(system.stiffness() + c0 * mass + c2 * damping_matrix_);
  effective_fc_ = system.partition(effective, true, false);
  factor_.compute(system.partition(effective, true, true));
  if (factor_.info() != Eigen::Success) throw AssemblyError("effective stiffness factorization failed");
}

DynamicState NewmarkIntegrator::step(const DynamicState& state, const Vector& external,
                                     std::span<const double> prescribed) const {
  const GlobalSystem& sys = *system_;
  const auto n = static_cast<Eigen::Index>(sys.dof_count());
  if (state.u.size() != n || state.v.size() != n || state.a.size() != n)
    throw ShapeError("state length does not match DOF count");
  if (prescribed.size() != sys.constrained_dofs().size())
    throw ShapeError("prescribed values must match the constrained DOF count");
  if (external.size() != 0 && external.size() != n) throw ShapeError("external force length mismatch");

  const double dt = dt_;
  const double c0 = 4.0 / (dt * dt);
  const double c1 = 4.0 / dt;
  const double c2 = 2.0 / dt;

  Vector rhs = sys.mass().cwiseProduct(c0 * state.u + c1 * state.v + state.a);
  if (damping_matrix_.nonZeros() > 0) rhs += damping_matrix_ * (c2 * state.u + state.v);
  if (external.size() != 0) rhs += external;

  Vector uc(static_cast<Eigen::Index>(prescribed.size()));
  for (std::size_t i = 0; i < prescribed.size(); ++i) uc[static_cast<Eigen::Index>(i)] = prescribed[i];
  Vector rhs_free = free_part(sys, rhs);
  if (uc.size() > 0) rhs_free -= effective_fc_ * uc;

  Vector next_u(n);
  for (std::size_t i = 0; i < prescribed.size(); ++i) next_u[sys.constrained_dofs()[i]] = prescribed[i];
  auto scatter_free = [&](const Vector& uf) {
    for (std::size_t i = 0; i < sys.free_dofs().size(); ++i) next_u[sys.free_dofs()[i]] = uf[i];
  };

  if (!feedback_) {
    scatter_free(factor_.solve(rhs_free));
  } else {
    // Constant-acceleration predictor for the first feedback evaluation.
    Vector guess = state.u + dt * state.v + 0.25 * dt * dt * state.a;
    for (std::size_t i = 0; i < prescribed.size(); ++i) guess[sys.constrained_dofs()[i]] = prescribed[i];
    Vector force = free_part(sys, feedback_(guess));
    double residual = 0.0;
    bool converged = false;
    for (int it = 0; it < options_.max_iterations; ++it) {
      scatter_free(factor_.solve(rhs_free + force));
      Vector updated = free_part(sys, feedback_(next_u));
      const double scale = std::max(updated.norm(), (rhs_free + updated).norm());
      residual = scale > 0.0 ? (updated - force).norm() / scale : 0.0;
      force = std::move(updated);
      if (residual <= options_.tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw StepError("neuron feedback iteration did not converge at t=" + std::to_string(state.time + dt) +
                          " (relative residual " + std::to_string(residual) + ")",
                      residual, state.time + dt);
    }
  }

  DynamicState next;
  next.time = state.time + dt;
  next.a = c0 * (next_u - state.u) - c1 * state.v - state.a;
  next.v = state.v + 0.5 * dt * (state.a + next.a);
  next.u = std::move(next_u);
  return next;
}

DynamicState newmark_step(const GlobalSystem& system, const DynamicState& state, double dt, const Vector& external,
                          std::span<const double> prescribed, const FeedbackForce& feedback,
                          FixedPointOptions options) {
  return NewmarkIntegrator(system, dt, feedback, options).step(state, external, prescribed);
}

Vector initial_acceleration(const GlobalSystem& system, const DynamicState& state, const Vector& external,
                            const FeedbackForce& feedback) {
  const auto n = static_cast<Eigen::Index>(system.dof_count());
  Vector force = -(system.stiffness() * state.u);
  const auto& damping = system.damping();
  if (damping.mass_coeff != 0.0) force -= damping.mass_coeff * system.mass().cwiseProduct(state.v);
  if (damping.stiffness_coeff != 0.0) force -= damping.stiffness_coeff * (system.stiffness() * state.v);
  if (external.size() != 0) force += external;
  if (feedback) force += feedback(state.u);
  Vector a = Vector::Zero(n);
  for (int dof : system.free_dofs()) a[dof] = force[dof] / system.mass()[dof];
  return a;
}

double mechanical_energy(const GlobalSystem& system, const DynamicState& state) {
  return 0.5 * state.v.dot(system.mass().cwiseProduct(state.v)) + 0.5 * state.u.dot(system.stiffness() * state.u);
}

Vector solve_static(const GlobalSystem& system, std::span<const double> prescribed, const Vector& external,
                    const FeedbackForce& feedback, FixedPointOptions options) {
  const auto n = static_cast<Eigen::Index>(system.dof_count());
  if (prescribed.size() != system.constrained_dofs().size())
    throw ShapeError("prescribed values must match the constrained DOF count");
  Eigen::SimplicialLDLT<SparseMatrix> factor(system.partition(system.stiffness(), true, true));
  Vector uc(static_cast<Eigen::Index>(prescribed.size()));
  for (std::size_t i = 0; i < prescribed.size(); ++i) uc[static_cast<Eigen::Index>(i)] = prescribed[i];

  Vector base = external.size() != 0 ? free_part(system, external) : Vector::Zero(system.free_dofs().size());
  if (uc.size() > 0) base -= system.partition(system.stiffness(), true, false) * uc;

  Vector u = Vector::Zero(n);
  for (std::size_t i = 0; i < prescribed.size(); ++i) u[system.constrained_dofs()[i]] = prescribed[i];
  auto scatter = [&](const Vector& uf) {
    for (std::size_t i = 0; i < system.free_dofs().size(); ++i) u[system.free_dofs()[i]] = uf[i];
  };
  if (!feedback) {
    scatter(factor.solve(base));
    return u;
  }
  Vector force = free_part(system, feedback(u));
  for (int it = 0; it < options.max_iterations; ++it) {
    scatter(factor.solve(base + force));
    Vector updated = free_part(system, feedback(u));
    const double scale = std::max(updated.norm(), (base + updated).norm());
    const double residual = scale > 0.0 ? (updated - force).norm() / scale : 0.0;
    force = std::move(updated);
    if (residual <= options.tolerance) return u;
  }
  throw StepError("static feedback iteration did not converge", 0.0, 0.0);
}

InputSignal make_demo_inputs(std::size_t channels, double dt, int steps, double amplitude) {
  if (channels == 0 || steps < 1 || !(dt > 0.0)) throw ConfigError("demo inputs need channels, steps and dt > 0");
  const double duration = steps * dt;
  const double f1 = 2.5 / duration;
  const double f2 = 4.5 / duration;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  InputSignal signal{Eigen::MatrixXd(steps, static_cast<Eigen::Index>(channels))};
  for (int k = 0; k < steps; ++k) {
    const double t = (k + 1) * dt;
    const double ramp_arg = std::min(1.0, 4.0 * t / duration);
    const double ramp = std::pow(std::sin(0.5 * std::numbers::pi * ramp_arg), 2);
    for (std::size_t j = 0; j < channels; ++j) {
      // s runs from -1 to 1 across the supports; the antisymmetric part
      // rotates the supported edge and drives in-plane bending.
      const double s = channels > 1 ? 2.0 * static_cast<double>(j) / static_cast<double>(channels - 1) - 1.0 : 0.0;
      const double value = std::sin(two_pi * f1 * t) + 0.8 * s * std::sin(two_pi * f2 * t + 0.3);
      signal.values(k, static_cast<Eigen::Index>(j)) = amplitude * ramp * value;
    }
  }
  return signal;
}

SimulationTrace simulate(const MembraneModel& model, const InputSignal& inputs, double dt, int steps,
                         const SimulationOptions& options) {
  const Mesh& mesh = model.mesh();
  if (steps < 1) throw ConfigError("simulation needs at least one step");
  if (inputs.steps() != steps)
    throw ShapeError("input signal has " + std::to_string(inputs.steps()) + " rows, expected " + std::to_string(steps));
  if (static_cast<std::size_t>(inputs.channels()) != mesh.supported_nodes.size())
    throw ShapeError("input signal has " + std::to_string(inputs.channels()) + " channels, expected " +
                     std::to_string(mesh.supported_nodes.size()));

  const GlobalSystem system = assemble(model, options.damping);
  FeedbackForce feedback;
  if (model.neurons_active()) feedback = [&model](const Vector& u) { return neuro_force_vector(model, u); };
  const NewmarkIntegrator integrator(system, dt, feedback, options.fixed_point);

  SimulationTrace trace;
  trace.nodes.push_back(mesh.output_node);
  for (int node : options.tracked_nodes) {
    if (node < 0 || static_cast<std::size_t>(node) >= mesh.node_count()) throw LookupError("tracked node out of range");
    trace.nodes.push_back(node);
  }
  trace.time.resize(static_cast<std::size_t>(steps) + 1);
  trace.horizontal.resize(steps + 1, static_cast<Eigen::Index>(trace.nodes.size()));

  DynamicState state = DynamicState::zero(mesh.dof_count());
  auto record = [&](int row) {
    trace.time[static_cast<std::size_t>(row)] = row * dt;
    for (std::size_t c = 0; c < trace.nodes.size(); ++c)
      trace.horizontal(row, static_cast<Eigen::Index>(c)) = state.u[2 * trace.nodes[c]];
  };
  record(0);

  std::vector<double> prescribed(system.constrained_dofs().size(), 0.0);
  const Vector no_load;
  for (int k = 0; k < steps; ++k) {
    for (std::size_t j = 0; j < mesh.supported_nodes.size(); ++j)
      prescribed[2 * j] = inputs.values(k, static_cast<Eigen::Index>(j));
    state = integrator.step(state, no_load, prescribed);
    record(k + 1);
  }
  return trace;
}

}  // namespace neuroskin

#pragma once

#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "neuroskin/bounds.hpp"

namespace neuroskin {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct PsoConfig {
  double inertia = 0.7;    // omega
  double cognitive = 1.5;  // phi1, pull towards the personal best
  double social = 1.5;     // phi2, pull towards the global best
  int particles = 20;
  int max_iterations = 50;
  Bounds bounds;
  std::uint64_t seed = 0;
  /// If set, particle 0 starts here instead of at a random point.
  std::optional<Eigen::VectorXd> initial_position;
  std::size_t workers = 1;

  void validate() const;
};

struct Particle {
  Eigen::VectorXd position;
  Eigen::VectorXd velocity;
  Eigen::VectorXd best_position;
  double best_fitness = std::numeric_limits<double>::infinity();
  double fitness = std::numeric_limits<double>::infinity();
};

struct Swarm {
  std::vector<Particle> particles;
  Eigen::VectorXd global_best;
  double global_best_fitness = std::numeric_limits<double>::infinity();
  int iteration = 0;
};

struct PsoHistoryEntry {
  int iteration = 0;
  double best_fitness = 0.0;
  Eigen::VectorXd best_position;
};

struct PsoResult {
  Eigen::VectorXd best_position;
  double best_fitness = 0.0;
  std::vector<PsoHistoryEntry> history;
  Swarm swarm;
};

/// Maps 64 random bits to [0, 1) using the top 53 bits.
inline double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

/// Random stream of one particle at one iteration (iteration -1 is the
/// initialization stream). Streams are independent of evaluation order.
std::mt19937_64 particle_stream(std::uint64_t seed, std::size_t particle, int iteration);

/// V = w V + phi1 R (E_bp - E) + phi2 C (E_g - E), with the diagonals of R
/// and C drawn fresh from `rng` (R first, then C).
template <class Rng>
  requires std::uniform_random_bit_generator<Rng> && (sizeof(typename Rng::result_type) == 8)
Eigen::VectorXd velocity_update(const Particle& particle, const Eigen::VectorXd& global_best,
                                const PsoConfig& config, Rng& rng) {
  const Eigen::Index n = particle.position.size();
  Eigen::VectorXd r(n), c(n);
  for (Eigen::Index i = 0; i < n; ++i) r[i] = unit_uniform(rng());
  for (Eigen::Index i = 0; i < n; ++i) c[i] = unit_uniform(rng());
  return config.inertia * particle.velocity +
         config.cognitive * r.cwiseProduct(particle.best_position - particle.position) +
         config.social * c.cwiseProduct(global_best - particle.position);
}

struct Motion {
  Eigen::VectorXd position;
  Eigen::VectorXd velocity;
};

/// E + V, clamped to the box. A clamped component also has its velocity
/// zeroed.
Motion position_update(const Eigen::VectorXd& position, const Eigen::VectorXd& velocity, const Bounds& bounds);

/// Uniform positions inside the bounds, zero velocities, nothing evaluated.
Swarm initialize_swarm(const PsoConfig& config);

/// Evaluates every particle (concurrently, up to config.workers), updates
/// personal and global bests, then moves the particles. Objective failures
/// and non-finite values score +inf.
Swarm pso_step(Swarm swarm, const Objective& objective, const PsoConfig& config);

using PsoIterationCallback = std::function<void(const PsoHistoryEntry&)>;

/// Runs config.max_iterations steps. Throws Error if every evaluation of the
/// first iteration fails.
PsoResult pso_run(const PsoConfig& config, const Objective& objective, const PsoIterationCallback& on_iteration = {});

}  // namespace neuroskin

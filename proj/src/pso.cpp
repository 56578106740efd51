#include "neuroskin/pso.hpp"

#include <cmath>

#include "neuroskin/error.hpp"
#include "neuroskin/parallel.hpp"

namespace neuroskin {

void PsoConfig::validate() const {
  bounds.validate();
  if (!(inertia >= 0.0) || !(cognitive >= 0.0) || !(social >= 0.0))
    throw ConfigError("PSO coefficients must be non-negative");
  if (particles < 1) throw ConfigError("PSO needs at least one particle");
  if (max_iterations < 1) throw ConfigError("PSO needs at least one iteration");
  if (initial_position && static_cast<std::size_t>(initial_position->size()) != bounds.dimension())
    throw ConfigError("initial position dimension does not match the bounds");
}

std::mt19937_64 particle_stream(std::uint64_t seed, std::size_t particle, int iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(particle), static_cast<std::uint32_t>(iteration + 1)};
  return std::mt19937_64(seq);
}

Motion position_update(const Eigen::VectorXd& position, const Eigen::VectorXd& velocity, const Bounds& bounds) {
  if (position.size() != velocity.size() || static_cast<std::size_t>(position.size()) != bounds.dimension())
    throw ShapeError("position, velocity and bounds dimensions differ");
  Motion out{position + velocity, velocity};
  for (Eigen::Index i = 0; i < position.size(); ++i) {
    if (out.position[i] > bounds.upper[i]) {
      out.position[i] = bounds.upper[i];
      out.velocity[i] = 0.0;
    } else if (out.position[i] < bounds.lower[i]) {
      out.position[i] = bounds.lower[i];
      out.velocity[i] = 0.0;
    }
  }
  return out;
}

Swarm initialize_swarm(const PsoConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(config.bounds.dimension());
  Swarm swarm;
  swarm.particles.resize(static_cast<std::size_t>(config.particles));
  for (std::size_t p = 0; p < swarm.particles.size(); ++p) {
    Particle& particle = swarm.particles[p];
    auto rng = particle_stream(config.seed, p, -1);
    particle.position.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double lo = config.bounds.lower[i];
      const double hi = config.bounds.upper[i];
      particle.position[i] = lo + (hi - lo) * unit_uniform(rng());
    }
    if (p == 0 && config.initial_position) particle.position = config.bounds.clamp(*config.initial_position);
    particle.velocity = Eigen::VectorXd::Zero(n);
    particle.best_position = particle.position;
  }
  swarm.global_best = swarm.particles.front().position;
  return swarm;
}

Swarm pso_step(Swarm swarm, const Objective& objective, const PsoConfig& config) {
  const std::vector<double> fitness =
      parallel_map(swarm.particles.size(), config.workers, [&](std::size_t p) {
        try {
          const double f = objective(swarm.particles[p].position);
          return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
        } catch (const std::exception&) {
          return std::numeric_limits<double>::infinity();
        }
      });

  for (std::size_t p = 0; p < swarm.particles.size(); ++p) {
    Particle& particle = swarm.particles[p];
    particle.fitness = fitness[p];
    if (particle.fitness < particle.best_fitness) {
      particle.best_fitness = particle.fitness;
      particle.best_position = particle.position;
    }
    if (particle.best_fitness < swarm.global_best_fitness) {
      swarm.global_best_fitness = particle.best_fitness;
      swarm.global_best = particle.best_position;
    }
  }

  for (std::size_t p = 0; p < swarm.particles.size(); ++p) {
    Particle& particle = swarm.particles[p];
    auto rng = particle_stream(config.seed, p, swarm.iteration);
    const Eigen::VectorXd velocity = velocity_update(particle, swarm.global_best, config, rng);
    Motion motion = position_update(particle.position, velocity, config.bounds);
    particle.position = std::move(motion.position);
    particle.velocity = std::move(motion.velocity);
  }
  ++swarm.iteration;
  return swarm;
}

PsoResult pso_run(const PsoConfig& config, const Objective& objective, const PsoIterationCallback& on_iteration) {
  Swarm swarm = initialize_swarm(config);
  PsoResult result;
  result.history.reserve(static_cast<std::size_t>(config.max_iterations));
  for (int k = 0; k < config.max_iterations; ++k) {
    swarm = pso_step(std::move(swarm), objective, config);
    if (k == 0 && std::isinf(swarm.global_best_fitness))
      throw Error("every objective evaluation in the first PSO iteration failed");
    PsoHistoryEntry entry{swarm.iteration, swarm.global_best_fitness, swarm.global_best};
    if (on_iteration) on_iteration(entry);
    result.history.push_back(std::move(entry));
  }
  result.best_position = swarm.global_best;
  result.best_fitness = swarm.global_best_fitness;
  result.swarm = std::move(swarm);
  return result;
}

}  // namespace neuroskin

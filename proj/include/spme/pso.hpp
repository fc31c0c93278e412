#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace spme::pso {

struct SwarmConfig {
  std::size_t particles = 40;
  std::size_t iterations = 150;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
  /// Maximum speed per dimension as a fraction of the box width.
  double velocity_clamp = 0.5;
  std::uint64_t seed = 0;
  /// Infeasible evaluations score penalty_factor * median feasible value of
  /// the first iteration, or fallback_penalty if none was feasible.
  double penalty_factor = 1e6;
  double fallback_penalty = 1e12;
  /// Evaluate particles concurrently with OpenMP.
  bool parallel = true;
};

/// Throws ContractViolation on invalid settings.
void validate(const SwarmConfig& config);

struct Bound {
  double lo = 0.0;
  double hi = 0.0;
};

/// nullopt marks an infeasible point; it is scored with the penalty.
using Objective = std::function<std::optional<double>(std::span<const double>)>;

struct SwarmResult {
  std::vector<double> best_point;
  double best_value = 0.0;
  std::vector<double> best_trace;  // global best after each iteration
  std::vector<double> mean_trace;  // mean penalized value of each iteration
  double penalty = 0.0;
  std::size_t feasible_evaluations = 0;
  std::size_t infeasible_evaluations = 0;
  /// Largest feasible value seen (for checking the penalty dominates).
  double max_feasible_value = 0.0;
};

/// Global-best particle swarm minimizer over a box. Positions are clamped to
/// the box after each move and the offending velocity component is zeroed.
/// Particle 0 starts at the box centre, the rest uniformly at random. All
/// random draws come from one stream seeded by config.seed and are taken
/// outside the parallel evaluation, so results are bitwise reproducible for a
/// given seed regardless of thread count.
SwarmResult minimize(const Objective& f, std::span<const Bound> bounds, const SwarmConfig& config);

}  // namespace spme::pso

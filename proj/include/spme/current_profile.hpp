#pragma once

#include <cstddef>
#include <vector>

namespace spme {

/// Uniformly sampled current input. Sample k holds current[k] over the
/// interval ending at time(k) = (k + 1) * dt. Positive current discharges.
struct CurrentProfile {
  double dt = 1.0;
  std::vector<double> current;

  std::size_t size() const { return current.size(); }
  double time(std::size_t k) const { return static_cast<double>(k + 1) * dt; }
  double duration() const { return static_cast<double>(current.size()) * dt; }

  /// Ampere-seconds drawn through the end of sample k.
  double charge_through(std::size_t k) const;

  bool operator==(const CurrentProfile&) const = default;
};

/// Rebuilds a profile from (time, current) columns, checking that times are
/// strictly increasing on a uniform grid. Throws ConfigError otherwise.
CurrentProfile profile_from_samples(const std::vector<double>& time, const std::vector<double>& current);

}  // namespace spme

#include "spme/current_profile.hpp"

#include <cmath>
#include <string>

#include "spme/errors.hpp"

namespace spme {

double CurrentProfile::charge_through(std::size_t k) const {
  double q = 0.0;
  for (std::size_t i = 0; i <= k && i < current.size(); ++i) q += current[i] * dt;
  return q;
}

CurrentProfile profile_from_samples(const std::vector<double>& time, const std::vector<double>& current) {
  if (time.size() != current.size()) throw ConfigError("time_s", "time and current columns differ in length");
  if (time.empty()) throw ConfigError("time_s", "profile has no samples");
  CurrentProfile p;
  p.dt = time.size() > 1 ? time[1] - time[0] : time[0];
  if (!(p.dt > 0.0)) throw ConfigError("time_s", "times must be strictly increasing");
  for (std::size_t k = 1; k < time.size(); ++k) {
    const double gap = time[k] - time[k - 1];
    if (!(gap > 0.0)) throw ConfigError("time_s", "times must be strictly increasing (row " + std::to_string(k) + ")");
    if (std::abs(gap - p.dt) > 1e-9 * std::max(1.0, p.dt))
      throw ConfigError("time_s", "non-uniform sample period at row " + std::to_string(k));
  }
  p.current = current;
  return p;
}

}  // namespace spme

#include "spme/pso.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <string>

#include "spme/errors.hpp"

namespace spme::pso {

void validate(const SwarmConfig& c) {
  if (c.particles < 1 || c.iterations < 1) throw ContractViolation("swarm needs at least one particle and iteration");
  if (c.inertia < 0.0 || c.cognitive < 0.0 || c.social < 0.0)
    throw ContractViolation("swarm coefficients must be nonnegative");
  if (!(c.velocity_clamp > 0.0 && c.velocity_clamp <= 1.0))
    throw ContractViolation("velocity clamp must lie in (0, 1]");
  if (!(c.penalty_factor > 0.0) || !(c.fallback_penalty > 0.0) || !std::isfinite(c.fallback_penalty))
    throw ContractViolation("penalty settings must be positive and finite");
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

SwarmResult minimize(const Objective& f, std::span<const Bound> bounds, const SwarmConfig& config) {
  validate(config);
  const std::size_t dims = bounds.size();
  if (dims == 0) throw ContractViolation("empty search box");
  for (std::size_t d = 0; d < dims; ++d)
    if (!std::isfinite(bounds[d].lo) || !std::isfinite(bounds[d].hi) || !(bounds[d].lo < bounds[d].hi))
      throw ContractViolation("bound " + std::to_string(d) + " must be finite with lo < hi");

  const std::size_t n = config.particles;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> vmax(dims);
  for (std::size_t d = 0; d < dims; ++d) vmax[d] = config.velocity_clamp * (bounds[d].hi - bounds[d].lo);

  std::vector<std::vector<double>> pos(n, std::vector<double>(dims)), vel(n, std::vector<double>(dims));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < dims; ++d) {
      const double lo = bounds[d].lo, hi = bounds[d].hi;
      pos[i][d] = i == 0 ? 0.5 * (lo + hi) : lo + unit(rng) * (hi - lo);
      vel[i][d] = (2.0 * unit(rng) - 1.0) * vmax[d];
    }

  std::vector<std::vector<double>> pbest = pos;
  std::vector<double> pbest_val(n, std::numeric_limits<double>::infinity());
  std::vector<std::optional<double>> raw(n);
  std::vector<unsigned char> bad(n, 0);
  std::vector<std::exception_ptr> thrown(n);

  SwarmResult out;
  out.best_value = std::numeric_limits<double>::infinity();
  out.best_trace.reserve(config.iterations);
  out.mean_trace.reserve(config.iterations);
  out.max_feasible_value = -std::numeric_limits<double>::infinity();
  bool penalty_set = false;

  for (std::size_t it = 0; it < config.iterations; ++it) {
    const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) if (config.parallel)
    for (long long i = 0; i < count; ++i) {
      try {
        raw[i] = f(std::span<const double>(pos[i]));
        bad[i] = raw[i] && !std::isfinite(*raw[i]);
      } catch (...) {
        thrown[i] = std::current_exception();
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (thrown[i]) std::rethrow_exception(thrown[i]);
      if (bad[i]) throw ContractViolation("objective returned a non-finite value at particle " + std::to_string(i));
    }

    if (!penalty_set) {
      std::vector<double> feasible;
      for (const auto& r : raw)
        if (r) feasible.push_back(*r);
      out.penalty = feasible.empty() ? config.fallback_penalty : config.penalty_factor * median(feasible);
      if (!(out.penalty > 0.0)) out.penalty = config.fallback_penalty;
      penalty_set = true;
    }

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v;
      if (raw[i]) {
        v = *raw[i];
        ++out.feasible_evaluations;
        out.max_feasible_value = std::max(out.max_feasible_value, v);
      } else {
        v = out.penalty;
        ++out.infeasible_evaluations;
      }
      sum += v;
      if (v < pbest_val[i]) {
        pbest_val[i] = v;
        pbest[i] = pos[i];
      }
      if (v < out.best_value) {
        out.best_value = v;
        out.best_point = pos[i];
      }
    }
    out.best_trace.push_back(out.best_value);
    out.mean_trace.push_back(sum / static_cast<double>(n));
    if (it + 1 == config.iterations) break;

    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dims; ++d) {
        const double r1 = unit(rng), r2 = unit(rng);
        double v = config.inertia * vel[i][d] + config.cognitive * r1 * (pbest[i][d] - pos[i][d]) +
                   config.social * r2 * (out.best_point[d] - pos[i][d]);
        v = std::clamp(v, -vmax[d], vmax[d]);
        double x = pos[i][d] + v;
        if (x < bounds[d].lo) {
          x = bounds[d].lo;
          v = 0.0;
        } else if (x > bounds[d].hi) {
          x = bounds[d].hi;
          v = 0.0;
        }
        pos[i][d] = x;
        vel[i][d] = v;
      }
  }
  if (out.feasible_evaluations == 0) out.max_feasible_value = 0.0;
  return out;
}

}  // namespace spme::pso

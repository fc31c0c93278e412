#include <doctest.h>

#include <cmath>
#include <limits>
#include <mutex>

#include "spme/errors.hpp"
#include "spme/pso.hpp"

using namespace spme;
using namespace spme::pso;

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(std::span<const double> x) {
  return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

Objective wrap(double (*f)(std::span<const double>)) {
  return [f](std::span<const double> x) -> std::optional<double> { return f(x); };
}

std::vector<Bound> box(std::size_t d, double lo, double hi) { return std::vector<Bound>(d, Bound{lo, hi}); }

}  // namespace

TEST_CASE("sphere in five dimensions under the default configuration") {
  const auto r = minimize(wrap(sphere), box(5, -5, 5), SwarmConfig{});
  CHECK(r.best_value < 1e-4);
  CHECK(r.best_trace.size() == SwarmConfig{}.iterations);
}

TEST_CASE("Rosenbrock with the large reference budget") {
  SwarmConfig c;
  c.particles = 200;
  c.iterations = 500;
  c.seed = 0;
  const auto r = minimize(wrap(rosenbrock), box(2, -2, 2), c);
  CHECK(r.best_value < 1e-2);
}

TEST_CASE("constant objective") {
  const Objective f = [](std::span<const double>) -> std::optional<double> { return 4.25; };
  const auto r = minimize(f, box(3, -1, 1), SwarmConfig{.particles = 5, .iterations = 4});
  CHECK(r.best_value == 4.25);
  for (double v : r.best_point) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("particle zero starts at the box centre") {
  std::vector<std::vector<double>> seen;
  const Objective f = [&](std::span<const double> x) -> std::optional<double> {
    seen.emplace_back(x.begin(), x.end());
    return 1.0;
  };
  std::vector<Bound> b = {{0, 2}, {-4, 6}};
  minimize(f, b, SwarmConfig{.particles = 3, .iterations = 1, .parallel = false});
  REQUIRE(seen.size() == 3);
  CHECK(seen[0] == std::vector<double>{1.0, 1.0});
}

TEST_CASE("every evaluated point lies inside the box") {
  std::mutex m;
  std::size_t outside = 0, calls = 0;
  std::vector<Bound> b = {{-1, 0.5}, {2, 3}, {-10, -9}};
  const Objective f = [&](std::span<const double> x) -> std::optional<double> {
    std::lock_guard<std::mutex> lock(m);
    ++calls;
    for (std::size_t j = 0; j < x.size(); ++j)
      if (x[j] < b[j].lo || x[j] > b[j].hi) ++outside;
    // Minimum sits outside the box, pushing particles into the walls.
    return std::pow(x[0] - 5, 2) + std::pow(x[1] + 5, 2) + x[2] * x[2];
  };
  const auto r = minimize(f, b, SwarmConfig{.particles = 15, .iterations = 30});
  CHECK(outside == 0);
  CHECK(calls == 15 * 30);
  CHECK(r.best_point[0] == 0.5);
  CHECK(r.best_point[1] == 2.0);
  CHECK(r.best_point[2] == -9.0);
}

TEST_CASE("seeded runs are bitwise reproducible, serial or parallel") {
  SwarmConfig c{.particles = 25, .iterations = 60, .seed = 99};
  const auto a = minimize(wrap(rosenbrock), box(2, -2, 2), c);
  const auto b = minimize(wrap(rosenbrock), box(2, -2, 2), c);
  c.parallel = false;
  const auto s = minimize(wrap(rosenbrock), box(2, -2, 2), c);
  CHECK(a.best_trace == b.best_trace);
  CHECK(a.mean_trace == b.mean_trace);
  CHECK(a.best_point == b.best_point);
  CHECK(a.best_trace == s.best_trace);
  CHECK(a.mean_trace == s.mean_trace);
  CHECK(a.best_point == s.best_point);
  c.seed = 100;
  CHECK(minimize(wrap(rosenbrock), box(2, -2, 2), c).mean_trace != s.mean_trace);
}

TEST_CASE("global best trace never increases") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = minimize(wrap(rosenbrock), box(2, -2, 2), SwarmConfig{.particles = 10, .iterations = 50, .seed = seed});
    for (std::size_t i = 1; i < r.best_trace.size(); ++i) CHECK(r.best_trace[i] <= r.best_trace[i - 1]);
    CHECK(r.best_value == r.best_trace.back());
  }
}

TEST_CASE("infeasible points receive a scale-aware penalty") {
  // Feasible only on the right half of the box.
  const Objective f = [](std::span<const double> x) -> std::optional<double> {
    if (x[0] < 0.0) return std::nullopt;
    return 1.0 + x[0] * x[0];
  };
  const auto r = minimize(f, box(1, -1, 1), SwarmConfig{.particles = 20, .iterations = 20});
  CHECK(r.infeasible_evaluations > 0);
  CHECK(r.feasible_evaluations > 0);
  CHECK(r.penalty >= 1e6 * 1.0);
  CHECK(r.penalty > r.max_feasible_value);
  CHECK(r.best_point[0] >= 0.0);

  const Objective never = [](std::span<const double>) -> std::optional<double> { return std::nullopt; };
  const auto n = minimize(never, box(1, -1, 1), SwarmConfig{.particles = 4, .iterations = 3});
  CHECK(n.feasible_evaluations == 0);
  CHECK(n.penalty == 1e12);
  CHECK(n.best_value == 1e12);
}

TEST_CASE("non-finite objective values violate the contract") {
  const Objective f = [](std::span<const double>) -> std::optional<double> {
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(minimize(f, box(2, -1, 1), SwarmConfig{.particles = 4, .iterations = 2}), ContractViolation);
  CHECK_THROWS_AS(minimize(f, box(2, -1, 1), SwarmConfig{.particles = 4, .iterations = 2, .parallel = false}),
                  ContractViolation);
}

TEST_CASE("configuration and bounds are checked") {
  CHECK_THROWS_AS(validate(SwarmConfig{.particles = 0}), ContractViolation);
  CHECK_THROWS_AS(validate(SwarmConfig{.iterations = 0}), ContractViolation);
  CHECK_THROWS_AS(validate(SwarmConfig{.inertia = -0.1}), ContractViolation);
  CHECK_THROWS_AS(validate(SwarmConfig{.velocity_clamp = 0.0}), ContractViolation);
  CHECK_THROWS_AS(validate(SwarmConfig{.velocity_clamp = 1.5}), ContractViolation);
  CHECK_THROWS_AS(minimize(wrap(sphere), std::vector<Bound>{{1, 1}}, SwarmConfig{}), ContractViolation);
  CHECK_THROWS_AS(minimize(wrap(sphere), std::vector<Bound>{}, SwarmConfig{}), ContractViolation);
}

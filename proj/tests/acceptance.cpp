// Acceptance suite. Runs every criterion (or the ones named on the command
// line, e.g. `spme_acceptance 1 4 7`) and prints one PASS/FAIL line each.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spme/cli.hpp"
#include "spme/estimator.hpp"
#include "spme/gp.hpp"
#include "spme/io.hpp"
#include "spme/pso.hpp"
#include "spme/scenario.hpp"
#include "support.hpp"

using namespace spme;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1: profiled likelihood identity and optimality of the profiled scale.
Outcome likelihood_identity() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(3, 30);
  double worst_identity = 0.0;
  double worst_grid_gap = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(rng);
    const Eigen::MatrixXd phi = testing::random_spd(n, rng);
    const Eigen::VectorXd eps = testing::random_vector(n, rng, 0.01);
    const double s2 = est::profiled_sigma2_f(eps, phi);
    const double direct = est::log_likelihood(eps, phi, s2);
    const double via_j = est::likelihood_from_kog(est::kog_value(eps, phi), static_cast<std::size_t>(n));
    worst_identity = std::max(worst_identity, std::abs(direct - via_j));
    // 1000-point log grid spanning six decades around the profiled value.
    for (int k = 0; k < 1000; ++k) {
      const double s = s2 * std::pow(10.0, -3.0 + 6.0 * k / 999.0);
      worst_grid_gap = std::max(worst_grid_gap, est::log_likelihood(eps, phi, s) - direct);
    }
  }
  return {worst_identity < 1e-10 && worst_grid_gap <= 0.0,
          "max |identity gap| " + fmt("%.3g", worst_identity) + ", max grid excess " + fmt("%.3g", worst_grid_gap)};
}

// 2: KOG with a scaled identity covariance reduces to least squares.
Outcome ls_reduction() {
  std::mt19937_64 rng(7);
  const Eigen::VectorXd eps = testing::random_vector(300, rng, 0.01);
  double worst = 0.0;
  for (double a : {0.1, 1.0, 10.0}) {
    const Eigen::MatrixXd phi = a * Eigen::MatrixXd::Identity(300, 300);
    worst = std::max(worst, std::abs(est::kog_value(eps, phi) - est::ls_value(eps)));
  }
  return {worst < 1e-12, "max |J_kog - J_ls| " + fmt("%.3g", worst)};
}

// 3: noise-free GP regression interpolates its training targets.
Outcome gp_interpolation() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  gp::FeatureMatrix X(50, 4);
  for (int i = 0; i < X.rows(); ++i)
    for (int j = 0; j < X.cols(); ++j) X(i, j) = u(rng);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) y(i) = 0.01 * std::sin(X(i, 0) + 2 * X(i, 1)) + 0.005 * X(i, 2) * X(i, 3);
  gp::KernelHyperparameters hp;
  hp.sigma2_f = 1e-4;
  hp.length_scales = Eigen::VectorXd::Constant(4, 1.0);
  hp.sigma2_n_tilde = 0.0;
  const auto post = gp::gpr_predict(X, y, X, hp);
  const double worst = (post.mean - y).cwiseAbs().maxCoeff();
  return {worst < 1e-6, "max |mean - y| " + fmt("%.3g", worst) + " V"};
}

// 4: coulomb counting and electrolyte conservation over a 0.5C discharge.
Outcome conservation() {
  const Cell cell = default_cell();
  const auto profile = scenario::build_profile(scenario::default_groups()[0].profile, 5.0);
  CellState state = initial_state(cell, 1.0);
  const double inventory0 = electrolyte_inventory(state, cell);
  const SpmeIntegrator integ(cell, profile.dt);
  const double capacity_As = cell_capacity_Ah(cell.params) * 3600.0;
  double worst_soc = 0.0, worst_e = 0.0;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    integ.advance(state, profile.current[k]);
    const double expected = 1.0 - profile.charge_through(k) / capacity_As;
    worst_soc = std::max(worst_soc, std::abs(soc_bulk(state, cell.params) - expected) / std::abs(expected));
    worst_e = std::max(worst_e, std::abs(electrolyte_inventory(state, cell) - inventory0) / inventory0);
  }
  return {profile.size() == 7000 && worst_soc < 1e-6 && worst_e < 1e-8,
          "max rel SOC error " + fmt("%.3g", worst_soc) + ", max rel electrolyte drift " + fmt("%.3g", worst_e)};
}

double mean_abs_error(const scenario::ExperimentReport& rep, est::ObjectiveKind obj) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : rep.parameters)
    if (r.objective == obj) s += std::abs(r.final_error_pct), ++n;
  return n ? s / n : std::numeric_limits<double>::infinity();
}

double rmse_on(const scenario::ExperimentReport& rep, est::ObjectiveKind obj, const std::string& label) {
  for (const auto& r : rep.rmse)
    if (r.objective == obj && r.profile == label) return r.rmse_truth_V;
  return std::numeric_limits<double>::infinity();
}

// 5: bias separation under a structured discrepancy and biased noise.
Outcome bias_separation(bool& penalty_ok) {
  const auto groups = scenario::default_groups();
  int passes = 0;
  std::ostringstream detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    scenario::TruthSpec truth;
    truth.cell = default_cell();
    truth.noise = {0.010, 0.010, 100 + seed};
    scenario::TrialSpec trial;
    trial.groups = {groups[0]};
    trial.iterations = 1;
    trial.evaluation = {{"5C", groups[1].profile, 1.0}, {"0.5C", groups[0].profile, 1.0}};
    trial.seed = seed;
    const auto rep = scenario::run_experiment(truth, trial, 1);
    penalty_ok = penalty_ok && rep.penalty_dominates();
    if (rep.failed_trials) {
      detail << " seed " << seed << ": failed;";
      continue;
    }
    const double pk = mean_abs_error(rep, est::ObjectiveKind::kog);
    const double pl = mean_abs_error(rep, est::ObjectiveKind::ls);
    const double vk = rmse_on(rep, est::ObjectiveKind::kog, "5C");
    const double vl = rmse_on(rep, est::ObjectiveKind::ls, "5C");
    const double reduction = 1.0 - vk / vl;
    const bool a = pk <= pl;
    const bool b = reduction >= 0.20;
    passes += (a && b);
    detail << " seed " << seed << ": |err| KOG " << fmt("%.2f", pk) << "% LS " << fmt("%.2f", pl) << "%, 5C RMSE KOG "
           << fmt("%.2f", vk * 1e3) << " mV LS " << fmt("%.2f", vl * 1e3) << " mV (" << fmt("%.0f", reduction * 100)
           << "%) " << (a && b ? "pass" : "fail") << ";";
  }
  return {passes >= 2, std::to_string(passes) + "/3 seeds pass;" + detail.str()};
}

// 6: noiseless, discrepancy-free recovery of all six parameters.
Outcome self_consistency(bool& penalty_ok) {
  scenario::TruthSpec truth;
  truth.cell = default_cell();
  truth.discrepancy_amplitude_V = 0.0;
  truth.noise = {0.0, 0.0, 1};
  scenario::TrialSpec trial;
  trial.iterations = 3;
  trial.seed = 1;
  const auto rep = scenario::run_experiment(truth, trial, 1);
  penalty_ok = penalty_ok && rep.penalty_dominates();
  if (rep.failed_trials) return {false, rep.warnings.empty() ? "trial failed" : rep.warnings.front()};
  bool ok = true;
  std::ostringstream detail;
  for (const auto& r : rep.parameters) {
    const bool weak = r.target == Target::D_e || r.target == Target::eps_e;
    const bool good = std::abs(r.final_error_pct) < (weak ? 15.0 : 2.0);
    ok = ok && good;
    detail << " " << est::to_string(r.objective) << ":" << target_name(r.target) << " "
           << fmt("%+.2f", r.final_error_pct) << "%" << (good ? "" : "(!)");
  }
  return {ok, detail.str().substr(1)};
}

// 7: optimizer regression on standard test functions.
Outcome pso_regression() {
  const pso::Objective sphere = [](std::span<const double> x) -> std::optional<double> {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
  };
  const pso::Objective rosen = [](std::span<const double> x) -> std::optional<double> {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  pso::SwarmConfig c;
  c.seed = 0;
  const auto s = pso::minimize(sphere, std::vector<pso::Bound>(5, {-5.0, 5.0}), c);
  // Particle 0 starts at the box centre, which is the sphere's minimizer on a
  // symmetric box; an off-centre box makes the search do the work.
  const auto s_off = pso::minimize(sphere, std::vector<pso::Bound>(5, {-3.0, 7.0}), c);
  const auto r = pso::minimize(rosen, std::vector<pso::Bound>(2, {-2.0, 2.0}), c);
  return {s.best_value < 1e-4 && s_off.best_value < 1e-4 && r.best_value < 1e-2,
          "sphere-5D " + fmt("%.3g", s.best_value) + " (off-centre box " + fmt("%.3g", s_off.best_value) +
              "), Rosenbrock-2D " + fmt("%.3g", r.best_value)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 8: generate and experiment replays are byte identical.
Outcome determinism() {
  const fs::path data = SPME_DATA_DIR;
  const fs::path dir = testing::scratch_dir("acceptance_determinism");
  std::vector<std::string> diffs;

  cli::cmd_generate(data / "configs" / "generate_0p5c.json", dir / "g1.csv");
  cli::cmd_generate(data / "configs" / "generate_0p5c.json", dir / "g2.csv");
  // The sidecar logs the seed; replaying it must reproduce the file.
  cli::cmd_generate(dir / "g1.json", dir / "g3.csv");
  if (slurp(dir / "g1.csv") != slurp(dir / "g2.csv")) diffs.push_back("generate rerun");
  if (slurp(dir / "g1.csv") != slurp(dir / "g3.csv")) diffs.push_back("generate sidecar replay");

  cli::cmd_experiment(data / "configs" / "experiment_smoke.json", dir / "e1");
  cli::cmd_experiment(dir / "e1" / "config.json", dir / "e2");
  for (const char* f : {"parameters.csv", "rmse.csv", "aggregates.csv", "report.txt", "seeds.json", "config.json"})
    if (slurp(dir / "e1" / f) != slurp(dir / "e2" / f)) diffs.push_back(std::string("experiment ") + f);

  std::string detail = "generate x3, experiment x2 compared";
  for (const auto& d : diffs) detail += "; differs: " + d;
  return {diffs.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  auto wanted = [&](int id) { return selected.empty() || selected.count(id); };

  bool penalty_ok = true;
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "likelihood identity", 10, likelihood_identity},
      {2, "least-squares reduction", 1, ls_reduction},
      {3, "GP interpolation", 1, gp_interpolation},
      {4, "physical conservation", 30, conservation},
      {5, "bias separation", 900, [&] { return bias_separation(penalty_ok); }},
      {6, "self-consistency recovery", 1800, [&] { return self_consistency(penalty_ok); }},
      {7, "PSO regression", 20, pso_regression},
      {8, "determinism", 900, determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << ", " << fmt("%.1f", secs)
              << " s of " << c.budget_s << " s): " << o.detail << (in_time ? "" : " [over time budget]") << std::endl;
  }
  if (wanted(5) || wanted(6)) {
    std::cout << (penalty_ok ? "PASS" : "FAIL") << " penalty dominance: infeasibility penalty exceeded every feasible J"
              << std::endl;
    failures += !penalty_ok;
  }
  return failures == 0 ? 0 : 1;
}

#include "spme/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "spme/errors.hpp"

namespace spme::scenario {

CurrentProfile build_profile(const ProfileSpec& spec, double capacity_Ah) {
  if (!(spec.rate_c >= 0.0) || !std::isfinite(spec.rate_c))
    throw ConfigError("profile.rate_c", "profile.rate_c must be nonnegative");
  if (!(spec.duration_s > 0.0)) throw ConfigError("profile.duration_s", "profile.duration_s must be positive");
  if (!(spec.dt_s > 0.0)) throw ConfigError("profile.dt_s", "profile.dt_s must be positive");
  if (spec.kind == ProfileKind::pulse && !(spec.freq_hz > 0.0))
    throw ConfigError("profile.freq_hz", "profile.freq_hz must be positive for a pulse profile");

  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s / spec.dt_s));
  const double high = spec.rate_c * capacity_Ah;
  CurrentProfile p;
  p.dt = spec.dt_s;
  p.current.resize(n, high);
  if (spec.kind == ProfileKind::pulse)
    for (std::size_t k = 0; k < n; ++k) {
      // Half-period index from the interval start time, in cycles.
      const auto half = static_cast<long long>(std::floor(2.0 * static_cast<double>(k) * spec.dt_s * spec.freq_hz + 1e-9));
      if (half % 2) p.current[k] = 0.0;
    }
  return p;
}

double discrepancy(double soc_surf, double current, double current_1c, double amplitude) {
  const double onset = 1.0 / (1.0 + std::exp(-(soc_surf - 0.8) / 0.05));
  return amplitude * std::tanh(2.0 * current / current_1c) * onset;
}

Dataset truth_generate(const TruthSpec& spec, const CurrentProfile& profile, double initial_soc, std::uint64_t stream) {
  if (!std::isfinite(spec.discrepancy_amplitude_V) || !std::isfinite(spec.noise.mean_V) ||
      !(spec.noise.std_V >= 0.0) || !std::isfinite(spec.noise.std_V))
    throw ConfigError("truth", "discrepancy amplitude and noise settings must be finite with std >= 0");

  Dataset d;
  d.profile = profile;
  d.initial_soc = initial_soc;
  d.noise_seed = spec.noise.seed;
  d.noise_stream = stream;

  Trajectory traj;
  if (spec.mode == TruthMode::fine_spme) {
    Cell fine = spec.cell;
    fine.grid.radial_nodes = spec.fine_radial_nodes;
    fine.grid.electrolyte_nodes_per_region = spec.fine_electrolyte_nodes;
    traj = simulate(profile, fine, initial_soc, {.substeps = spec.fine_substeps});
  } else {
    traj = simulate(profile, spec.cell, initial_soc);
  }
  if (traj.truncated())
    throw Error(std::string("truth simulation truncated (") + to_string(traj.truncation) + ") after " +
                std::to_string(traj.size()) + " of " + std::to_string(profile.size()) + " samples");

  const double i_1c = spec.cell.params.capacity_nominal_Ah;
  d.truth.reserve(traj.size());
  for (const auto& r : traj.records) {
    double v = r.voltage;
    if (spec.mode == TruthMode::spme_plus_discrepancy)
      v += discrepancy(r.soc_surf, r.current, i_1c, spec.discrepancy_amplitude_V);
    d.truth.push_back(v);
  }

  std::seed_seq seq{spec.noise.seed, stream};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, 1.0);
  d.measured.reserve(d.truth.size());
  for (double v : d.truth) d.measured.push_back(v + spec.noise.mean_V + spec.noise.std_V * noise(rng));
  return d;
}

namespace {

void apply_one(CellParameters& p, const CellParameters& truth, InitialError& e) {
  const double base = get(truth, e.target);
  double value = base * (1.0 + e.fraction);
  if (is_volume_fraction(e.target) && value >= 1.0) {
    e.fraction = -e.fraction;
    e.sign_flipped = true;
    value = base * (1.0 + e.fraction);
  }
  set(p, e.target, value);
}

}  // namespace

PerturbedParameters sample_initial_errors(const CellParameters& truth, std::span<const Target> targets, double lo,
                                          double hi, std::uint64_t seed) {
  if (!(lo > 0.0 && lo <= hi)) throw ConfigError("initial_error_range", "initial error range must satisfy 0 < lo <= hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PerturbedParameters out{truth, {}};
  for (Target t : targets) {
    const double magnitude = lo + (hi - lo) * unit(rng);
    const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    InitialError e{t, sign * magnitude, false};
    apply_one(out.params, truth, e);
    out.errors.push_back(e);
  }
  return out;
}

PerturbedParameters apply_initial_errors(const CellParameters& truth, std::span<const InitialError> errors) {
  PerturbedParameters out{truth, {}};
  for (InitialError e : errors) {
    e.sign_flipped = false;
    apply_one(out.params, truth, e);
    out.errors.push_back(e);
  }
  return out;
}

est::TargetBound default_bound(Target t, double initial, double lo_factor, double hi_factor) {
  est::TargetBound b{t, initial * lo_factor, initial * hi_factor};
  if (is_volume_fraction(t)) {
    b.lower = std::clamp(b.lower, 0.01, 0.99);
    b.upper = std::clamp(b.upper, 0.01, 0.99);
  }
  return b;
}

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("rmse inputs differ in length");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

std::vector<GroupSpec> default_groups() {
  return {
      {"0.5C Discharge", {ProfileKind::cc_discharge, 0.5, 0.0, 7000.0, 1.0}, 1.0, {Target::eps_s_n, Target::eps_s_p}},
      {"5C Discharge", {ProfileKind::cc_discharge, 5.0, 0.0, 650.0, 1.0}, 1.0, {Target::D_s_n, Target::D_s_p}},
      {"1C Pulse (1/60 Hz)", {ProfileKind::pulse, 1.0, 1.0 / 60.0, 3600.0, 1.0}, 1.0, {Target::D_e, Target::eps_e}},
  };
}

namespace {

double error_pct(double estimate, double truth) { return 100.0 * (estimate - truth) / truth; }

}  // namespace

ExperimentReport run_experiment(const TruthSpec& truth, const TrialSpec& trial, std::size_t n_trials) {
  if (n_trials < 1) throw ConfigError("n_trials", "n_trials must be at least 1");
  if (trial.groups.empty()) throw ConfigError("trial.groups", "at least one group is required");
  if (!(trial.error_lo > 0.0 && trial.error_lo <= trial.error_hi))
    throw ConfigError("trial.initial_error_range", "initial error range must satisfy 0 < lo <= hi");

  std::vector<Target> perturbed = trial.perturbed;
  if (perturbed.empty())
    for (const auto& g : trial.groups) perturbed.insert(perturbed.end(), g.targets.begin(), g.targets.end());
  std::vector<Target> reported;
  for (const auto& g : trial.groups) reported.insert(reported.end(), g.targets.begin(), g.targets.end());

  std::vector<EvaluationProfile> evaluation = trial.evaluation;
  if (evaluation.empty())
    for (const auto& g : trial.groups) evaluation.push_back({g.label, g.profile, g.initial_soc});

  const CellParameters& theta_true = truth.cell.params;
  const double capacity = theta_true.capacity_nominal_Ah;
  ExperimentReport report;

  for (std::size_t t = 0; t < n_trials; ++t) {
    TrialSeeds seeds{t, trial.seed + t, truth.noise.seed, trial.swarm.seed + 100000 * static_cast<std::uint64_t>(t)};
    report.seeds.push_back(seeds);
    try {
      const auto start = sample_initial_errors(theta_true, perturbed, trial.error_lo, trial.error_hi, seeds.error_seed);

      std::vector<Dataset> group_data;
      for (std::size_t g = 0; g < trial.groups.size(); ++g)
        group_data.push_back(truth_generate(truth, build_profile(trial.groups[g].profile, capacity),
                                            trial.groups[g].initial_soc, 64 * t + g));
      std::vector<Dataset> eval_data;
      for (std::size_t e = 0; e < evaluation.size(); ++e)
        eval_data.push_back(truth_generate(truth, build_profile(evaluation[e].profile, capacity),
                                           evaluation[e].initial_soc, 64 * t + 32 + e));

      std::vector<ParameterRow> rows;
      std::vector<RmseRow> rmse_rows;
      for (auto objective : trial.objectives) {
        std::vector<est::EstimationProblem> problems;
        for (std::size_t g = 0; g < trial.groups.size(); ++g) {
          est::EstimationProblem p;
          p.measured = group_data[g].measured;
          p.profile = group_data[g].profile;
          p.initial_soc = trial.groups[g].initial_soc;
          p.cell = truth.cell;
          p.objective = objective;
          p.downsample = trial.downsample;
          p.sigma2_n_tilde = trial.sigma2_n_tilde;
          for (Target target : trial.groups[g].targets)
            p.targets.push_back(
                default_bound(target, get(start.params, target), trial.bound_lo_factor, trial.bound_hi_factor));
          problems.push_back(std::move(p));
        }
        pso::SwarmConfig swarm = trial.swarm;
        swarm.seed = seeds.swarm_seed;
        const auto result = est::sequential_estimate(problems, start.params, trial.iterations, swarm);
        for (const auto& step : result.steps) {
          if (step.skipped)
            report.warnings.push_back("trial " + std::to_string(t) + " (" + est::to_string(objective) +
                                      "): skipped " + step.skip_reason);
          if (step.skipped) continue;
          report.max_feasible_J = std::max(report.max_feasible_J, step.result.max_feasible_J);
          report.min_penalty = std::min(report.min_penalty, step.result.penalty);
        }

        for (Target target : reported) {
          ParameterRow row;
          row.trial = t;
          row.target = target;
          row.objective = objective;
          row.truth = get(theta_true, target);
          row.initial = get(start.params, target);
          row.estimate = get(result.final_parameters, target);
          row.initial_error_pct = error_pct(row.initial, row.truth);
          row.final_error_pct = error_pct(row.estimate, row.truth);
          rows.push_back(row);
        }
        Cell fitted = truth.cell;
        fitted.params = result.final_parameters;
        for (std::size_t e = 0; e < evaluation.size(); ++e) {
          const auto& data = eval_data[e];
          // No cutoff here: the fitted model may legitimately cross the window.
          const auto traj = simulate(data.profile, fitted, data.initial_soc, {.enforce_cutoff = false});
          if (traj.truncated()) throw Error("fitted model leaves the physical range on profile " + evaluation[e].label);
          const auto v = traj.voltage();
          rmse_rows.push_back({t, objective, evaluation[e].label, rmse(v, data.truth), rmse(v, data.measured)});
        }
      }
      report.parameters.insert(report.parameters.end(), rows.begin(), rows.end());
      report.rmse.insert(report.rmse.end(), rmse_rows.begin(), rmse_rows.end());
    } catch (const Error& e) {
      ++report.failed_trials;
      report.warnings.push_back("trial " + std::to_string(t) + " failed: " + e.what());
    }
  }

  if (!report.penalty_dominates())
    report.warnings.push_back("infeasibility penalty " + std::to_string(report.min_penalty) +
                              " does not exceed the largest feasible J " + std::to_string(report.max_feasible_J));
  for (auto objective : trial.objectives)
    for (Target target : reported) {
      std::vector<double> v;
      for (const auto& r : report.parameters)
        if (r.objective == objective && r.target == target) v.push_back(r.final_error_pct);
      Aggregate a{target, objective, 0.0, 0.0, v.size()};
      if (!v.empty()) {
        for (double x : v) a.mean_pct += x;
        a.mean_pct /= static_cast<double>(v.size());
        if (v.size() > 1) {
          double ss = 0.0;
          for (double x : v) ss += (x - a.mean_pct) * (x - a.mean_pct);
          a.std_pct = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
      }
      report.aggregates.push_back(a);
    }
  return report;
}

namespace {

std::string fmt_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f%%", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

}  // namespace

std::string render_report(const ExperimentReport& report) {
  std::ostringstream os;
  os << "Estimation errors per trial\n";
  os << pad("trial", 7) << pad("parameter", 11) << pad("initial", 11) << pad("kog", 11) << pad("ls", 11) << "\n";
  std::map<std::pair<std::size_t, int>, std::pair<std::string, std::string>> cells;
  std::map<std::pair<std::size_t, int>, double> initial;
  for (const auto& r : report.parameters) {
    const auto key = std::make_pair(r.trial, static_cast<int>(r.target));
    initial[key] = r.initial_error_pct;
    (r.objective == est::ObjectiveKind::kog ? cells[key].first : cells[key].second) = fmt_pct(r.final_error_pct);
  }
  for (const auto& [key, v] : cells)
    os << pad(std::to_string(key.first), 7) << pad(std::string(target_name(static_cast<Target>(key.second))), 11)
       << pad(fmt_pct(initial[key]), 11) << pad(v.first.empty() ? "-" : v.first, 11)
       << pad(v.second.empty() ? "-" : v.second, 11) << "\n";

  os << "\nEstimation error means and standard deviations\n";
  os << pad("parameter", 11) << pad("mean kog", 11) << pad("mean ls", 11) << pad("std kog", 11) << pad("std ls", 11)
     << "\n";
  std::map<int, std::array<std::string, 4>> agg;
  std::vector<int> order;
  for (const auto& a : report.aggregates) {
    const int k = static_cast<int>(a.target);
    if (!agg.count(k)) order.push_back(k);
    auto& row = agg[k];
    if (row[0].empty()) row = {"-", "-", "-", "-"};
    const bool kog = a.objective == est::ObjectiveKind::kog;
    row[kog ? 0 : 1] = a.trials ? fmt_pct(a.mean_pct) : "-";
    row[kog ? 2 : 3] = a.trials ? fmt_pct(a.std_pct) : "-";
  }
  for (int k : order) {
    os << pad(std::string(target_name(static_cast<Target>(k))), 11);
    for (const auto& s : agg[k]) os << pad(s, 11);
    os << "\n";
  }

  if (!report.rmse.empty()) {
    os << "\nVoltage RMSE (mV)\n";
    os << pad("trial", 7) << pad("objective", 11) << pad("profile", 22) << pad("vs truth", 11) << "vs measured\n";
    for (const auto& r : report.rmse) {
      char a[32], b[32];
      std::snprintf(a, sizeof a, "%.3f", 1e3 * r.rmse_truth_V);
      std::snprintf(b, sizeof b, "%.3f", 1e3 * r.rmse_measured_V);
      os << pad(std::to_string(r.trial), 7) << pad(est::to_string(r.objective), 11) << pad(r.profile, 22) << pad(a, 11)
         << b << "\n";
    }
  }
  if (report.failed_trials) os << "\n" << report.failed_trials << " trial(s) failed\n";
  for (const auto& w : report.warnings) os << "warning: " << w << "\n";
  return os.str();
}

}  // namespace spme::scenario

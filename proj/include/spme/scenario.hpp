#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spme/cell_model.hpp"
#include "spme/estimator.hpp"
#include "spme/pso.hpp"

namespace spme::scenario {

enum class ProfileKind { cc_discharge, pulse };

struct ProfileSpec {
  ProfileKind kind = ProfileKind::cc_discharge;
  double rate_c = 1.0;
  double freq_hz = 0.0;  // pulse only
  double duration_s = 3600.0;
  double dt_s = 1.0;
  bool operator==(const ProfileSpec&) const = default;
};

/// CC: constant rate_c * capacity. Pulse: 50 % duty square wave between
/// rate_c * capacity and rest, starting high; sample k is high when
/// floor(2 * k * dt * freq) is even.
CurrentProfile build_profile(const ProfileSpec& spec, double capacity_Ah);

enum class TruthMode { fine_spme, spme_plus_discrepancy };

struct NoiseSpec {
  double mean_V = 0.010;
  double std_V = 0.010;
  std::uint64_t seed = 1;
  bool operator==(const NoiseSpec&) const = default;
};

struct TruthSpec {
  Cell cell;  // true parameters
  TruthMode mode = TruthMode::spme_plus_discrepancy;
  double discrepancy_amplitude_V = 0.020;
  NoiseSpec noise;
  // FINE_SPME refinement.
  int fine_radial_nodes = 40;
  int fine_electrolyte_nodes = 40;
  int fine_substeps = 10;
};

/// Smooth injected discrepancy, V:
///   amplitude * tanh(2 I / I_1C) / (1 + exp(-(SOC_surf - 0.8) / 0.05))
/// It is active near full charge under load. Its step-to-step change is
/// bounded by
///   amplitude * (2 |dI| / I_1C + 5 |d SOC_surf|).
double discrepancy(double soc_surf, double current, double current_1c, double amplitude);

struct Dataset {
  CurrentProfile profile;
  double initial_soc = 1.0;
  std::vector<double> truth;
  std::vector<double> measured;
  std::uint64_t noise_seed = 0;
  std::uint64_t noise_stream = 0;
};

/// Noise-free truth voltage and a measurement with i.i.d. Gaussian noise
/// (mean, std) drawn from the (noise.seed, stream) random stream. Throws
/// Error if the truth simulation truncates.
Dataset truth_generate(const TruthSpec& spec, const CurrentProfile& profile, double initial_soc,
                       std::uint64_t stream = 0);

struct InitialError {
  Target target = Target::eps_s_n;
  double fraction = 0.0;  // signed relative error applied
  bool sign_flipped = false;
};

struct PerturbedParameters {
  CellParameters params;
  std::vector<InitialError> errors;
};

/// Each target is multiplied by (1 + e), |e| ~ U[lo, hi], random sign. A
/// volume fraction that would reach 1 takes the negative sign instead.
PerturbedParameters sample_initial_errors(const CellParameters& truth, std::span<const Target> targets, double lo,
                                          double hi, std::uint64_t seed);

/// Applies fixed fractional errors with the same sign rule.
PerturbedParameters apply_initial_errors(const CellParameters& truth, std::span<const InitialError> errors);

/// Search bounds around an initial value: [lo_factor, hi_factor] times the
/// value, volume fractions clipped to [0.01, 0.99].
est::TargetBound default_bound(Target t, double initial, double lo_factor = 0.25, double hi_factor = 50.0);

double rmse(std::span<const double> a, std::span<const double> b);

struct GroupSpec {
  std::string label;
  ProfileSpec profile;
  double initial_soc = 1.0;
  std::vector<Target> targets;
};

/// Group 1: eps_s_n, eps_s_p on a 0.5C discharge (7000 s).
/// Group 2: D_s_n, D_s_p on a 5C discharge (650 s).
/// Group 3: D_e, eps_e on a 1C pulse at 1/60 Hz (3600 s).
std::vector<GroupSpec> default_groups();

struct EvaluationProfile {
  std::string label;
  ProfileSpec profile;
  double initial_soc = 1.0;
};

struct TrialSpec {
  double error_lo = 0.5;
  double error_hi = 1.0;
  std::vector<GroupSpec> groups = default_groups();
  /// Targets given initial errors; empty means every group target.
  std::vector<Target> perturbed;
  /// Profiles for the voltage RMSE table; empty means the group profiles.
  std::vector<EvaluationProfile> evaluation;
  int iterations = 3;
  std::size_t downsample = 300;
  double sigma2_n_tilde = 0.1;
  double bound_lo_factor = 0.25;
  double bound_hi_factor = 50.0;
  std::vector<est::ObjectiveKind> objectives = {est::ObjectiveKind::kog, est::ObjectiveKind::ls};
  pso::SwarmConfig swarm;
  std::uint64_t seed = 1;
};

struct ParameterRow {
  std::size_t trial = 0;
  Target target = Target::eps_s_n;
  est::ObjectiveKind objective = est::ObjectiveKind::kog;
  double truth = 0.0;
  double initial = 0.0;
  double estimate = 0.0;
  double initial_error_pct = 0.0;
  double final_error_pct = 0.0;
};

struct RmseRow {
  std::size_t trial = 0;
  est::ObjectiveKind objective = est::ObjectiveKind::kog;
  std::string profile;
  double rmse_truth_V = 0.0;
  double rmse_measured_V = 0.0;
};

struct Aggregate {
  Target target = Target::eps_s_n;
  est::ObjectiveKind objective = est::ObjectiveKind::kog;
  double mean_pct = 0.0;
  double std_pct = 0.0;  // sample standard deviation, 0 for a single trial
  std::size_t trials = 0;
};

struct TrialSeeds {
  std::size_t trial = 0;
  std::uint64_t error_seed = 0;
  std::uint64_t noise_seed = 0;
  std::uint64_t swarm_seed = 0;
};

struct ExperimentReport {
  std::vector<ParameterRow> parameters;
  std::vector<RmseRow> rmse;
  std::vector<Aggregate> aggregates;
  std::vector<TrialSeeds> seeds;
  std::size_t failed_trials = 0;
  std::vector<std::string> warnings;
  /// Largest feasible J and smallest infeasibility penalty over every swarm
  /// run; the penalty must dominate.
  double max_feasible_J = 0.0;
  double min_penalty = std::numeric_limits<double>::infinity();
  bool penalty_dominates() const { return min_penalty > max_feasible_J; }
};

/// Trial t draws initial errors with seed trial.seed + t, noise from stream
/// (noise.seed, 64 t + profile index) and runs the sequential estimation for
/// each objective with swarm seed swarm.seed + 100000 t. Failed trials are
/// logged in warnings and left out of the aggregates.
ExperimentReport run_experiment(const TruthSpec& truth, const TrialSpec& trial, std::size_t n_trials);

/// Text table with per-trial initial/final errors and the mean/std summary.
std::string render_report(const ExperimentReport& report);

}  // namespace spme::scenario

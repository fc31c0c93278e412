#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spme/cell_model.hpp"
#include "spme/gp.hpp"
#include "spme/pso.hpp"

namespace spme::est {

/// Model error eps = y_m - y at retained time steps, with the discrepancy
/// inputs of the same steps.
struct ErrorVector {
  Eigen::VectorXd eps;
  gp::FeatureMatrix features;         // N x 4
  std::vector<std::size_t> indices;   // positions in the full-resolution sequence

  std::size_t size() const { return static_cast<std::size_t>(eps.size()); }
};

ErrorVector model_error(std::span<const double> measured, const Trajectory& trajectory);

/// index_i = round(i (n_full - 1) / (m - 1)), i = 0..m-1, in exact integer
/// arithmetic (ties round up). m == 1 keeps index 0.
std::vector<std::size_t> downsample_indices(std::size_t n_full, std::size_t m);
ErrorVector downsample(const ErrorVector& err, std::size_t m);

// Likelihood pieces. Phi_n is factored with the gp::SpdFactor jitter policy.

/// sigma2_f maximizing the likelihood: eps^T Phi_n^{-1} eps / N.
double profiled_sigma2_f(const Eigen::VectorXd& eps, const Eigen::MatrixXd& phi_n);

/// -(N/2) log(2 pi sigma2_f) - (1/2) log|Phi_n| - eps^T Phi_n^{-1} eps / (2 sigma2_f)
double log_likelihood(const Eigen::VectorXd& eps, const Eigen::MatrixXd& phi_n, double sigma2_f);

/// The likelihood with sigma2_f profiled out, evaluated term by term:
/// -(N/2) log((2 pi / N) eps^T Phi_n^{-1} eps) - (1/2) log|Phi_n| - N/2
double profiled_log_likelihood(const Eigen::VectorXd& eps, const Eigen::MatrixXd& phi_n);

/// J = |Phi_n|^(1/N) eps^T Phi_n^{-1} eps, with the determinant kept in the log domain.
double kog_value(const Eigen::VectorXd& eps, const gp::SpdFactor& phi_n);
double kog_value(const Eigen::VectorXd& eps, const Eigen::MatrixXd& phi_n);

/// Maps J back to the profiled log likelihood: -(N/2)(1 + log(2 pi J / N)).
double likelihood_from_kog(double J, std::size_t n);

/// J = eps^T eps
double ls_value(const Eigen::VectorXd& eps);

enum class ObjectiveKind { kog, ls };

const char* to_string(ObjectiveKind k);

/// Search interval for one target, physical units. Diffusion coefficients
/// are searched in log10 space, volume fractions linearly.
struct TargetBound {
  Target target = Target::eps_s_n;
  double lower = 0.0;
  double upper = 0.0;
};

struct EstimationProblem {
  std::vector<double> measured;
  CurrentProfile profile;
  double initial_soc = 1.0;
  std::vector<TargetBound> targets;
  Cell cell;  // fixed-parameter snapshot; target entries are overwritten per candidate
  ObjectiveKind objective = ObjectiveKind::kog;
  std::size_t downsample = 300;
  double sigma2_n_tilde = 0.1;
  double length_scale_min = 1e-2;  // standardized feature units
  double length_scale_max = 1e2;
  /// Replace Phi_n by the identity (test switch for the least-squares reduction).
  bool force_identity_covariance = false;
};

/// Throws ConfigError naming the violated invariant.
void validate(const EstimationProblem& problem);

struct Candidate {
  std::vector<double> theta;      // one value per problem target, physical units
  Eigen::VectorXd length_scales;  // kFeatureCount entries; ignored by least squares
};

struct KogEvaluation {
  double J = 0.0;
  double sigma2_f = 0.0;
  double log_det = 0.0;
  double quad = 0.0;
  std::size_t n = 0;
};

/// Full pipeline: simulate -> model_error -> downsample -> standardize
/// features -> Phi_n -> J. nullopt when the simulation truncates or fails, or
/// Phi_n cannot be factored.
std::optional<KogEvaluation> evaluate_kog(const Candidate& candidate, const EstimationProblem& problem);
std::optional<double> evaluate_ls(std::span<const double> theta, const EstimationProblem& problem);

/// Penalty returned by the stand-alone objectives for infeasible candidates.
/// Inside estimate_group the swarm replaces it with a scale-aware value.
inline constexpr double kFallbackPenalty = 1e12;

double objective_kog(const Candidate& candidate, const EstimationProblem& problem);
double objective_ls(std::span<const double> theta, const EstimationProblem& problem);

struct EstimationResult {
  ObjectiveKind objective = ObjectiveKind::kog;
  std::vector<Target> targets;
  std::vector<double> theta;
  CellParameters parameters;     // snapshot with theta applied
  Eigen::VectorXd length_scales;  // empty for least squares
  double sigma2_n_tilde = 0.0;
  double sigma2_f = 0.0;          // profiled at the final point (KOG only)
  double J = 0.0;
  std::vector<double> best_trace;
  std::vector<double> mean_trace;
  double penalty = 0.0;
  double max_feasible_J = 0.0;
  std::size_t feasible_evaluations = 0;
  std::size_t infeasible_evaluations = 0;
  double wall_time_s = 0.0;
};

/// Minimizes the selected objective over the targets (plus the four
/// length scales for KOG) with the particle swarm. Throws EstimationError if
/// no candidate was ever feasible.
EstimationResult estimate_group(const EstimationProblem& problem, const pso::SwarmConfig& swarm);

struct SequentialStep {
  int iteration = 0;
  std::size_t group = 0;
  CellParameters snapshot_before;
  EstimationResult result;
  /// No feasible candidate this pass; the snapshot was left unchanged.
  bool skipped = false;
  std::string skip_reason;
};

struct SequentialResult {
  std::vector<SequentialStep> steps;
  CellParameters final_parameters;
};

/// Estimates the groups in order, writing each group's estimate into the
/// shared parameter snapshot before the next group runs, and repeats the
/// pass `iterations` times. Group g of iteration it uses swarm seed
/// swarm.seed + 1000 * it + g.
///
/// A group with no feasible candidate (e.g. its profile depletes the
/// electrolyte until a later group corrects D_e) is skipped for that pass.
/// EstimationError is thrown only if some group is never estimated.
SequentialResult sequential_estimate(const std::vector<EstimationProblem>& groups, const CellParameters& initial,
                                     int iterations, const pso::SwarmConfig& swarm);

}  // namespace spme::est

#include "spme/estimator.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "spme/errors.hpp"

namespace spme::est {

ErrorVector model_error(std::span<const double> measured, const Trajectory& trajectory) {
  if (measured.size() != trajectory.size())
    throw DimensionError("measurement length " + std::to_string(measured.size()) + " does not match trajectory length " +
                         std::to_string(trajectory.size()));
  const auto n = static_cast<Eigen::Index>(measured.size());
  ErrorVector err;
  err.eps.resize(n);
  err.features.resize(n, kFeatureCount);
  err.indices.resize(measured.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& r = trajectory.records[k];
    err.eps[k] = measured[k] - r.voltage;
    const auto x = features(r);
    for (std::size_t j = 0; j < kFeatureCount; ++j) err.features(k, j) = x[j];
    err.indices[k] = static_cast<std::size_t>(k);
  }
  return err;
}

std::vector<std::size_t> downsample_indices(std::size_t n_full, std::size_t m) {
  if (m < 1) throw ConfigError("downsample", "downsample budget must be at least 1");
  if (m > n_full)
    throw ConfigError("downsample", "downsample budget " + std::to_string(m) + " exceeds sequence length " +
                                        std::to_string(n_full));
  std::vector<std::size_t> idx(m, 0);
  if (m == 1) return idx;
  const std::size_t span = n_full - 1, steps = m - 1;
  for (std::size_t i = 0; i < m; ++i) idx[i] = (2 * i * span + steps) / (2 * steps);
  return idx;
}

ErrorVector downsample(const ErrorVector& err, std::size_t m) {
  const auto idx = downsample_indices(err.size(), m);
  ErrorVector out;
  out.eps.resize(static_cast<Eigen::Index>(m));
  out.features.resize(static_cast<Eigen::Index>(m), err.features.cols());
  out.indices.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto k = static_cast<Eigen::Index>(idx[i]);
    out.eps[i] = err.eps[k];
    out.features.row(i) = err.features.row(k);
    out.indices[i] = err.indices[idx[i]];
  }
  return out;
}

namespace {

void check_square(const Eigen::VectorXd& eps, const Eigen::MatrixXd& phi_n) {
  if (phi_n.rows() != phi_n.cols() || phi_n.rows() != eps.size())
    throw DimensionError("covariance dimension does not match error vector length");
  if (eps.size() == 0) throw DimensionError("empty error vector");
}

}  // namespace

double profiled_sigma2_f(const Eigen::VectorXd& eps, const Eigen::MatrixXd& phi_n) {
  check_square(eps, phi_n);
  const gp::SpdFactor f(phi_n);
  return f.quad_form(eps) / static_cast<double>(eps.size());
}

double log_likelihood(const Eigen::VectorXd& eps, const Eigen::MatrixXd& phi_n, double sigma2_f) {
  check_square(eps, phi_n);
  if (!(sigma2_f > 0.0)) throw ContractViolation("sigma2_f must be positive");
  const gp::SpdFactor f(phi_n);
  const double n = static_cast<double>(eps.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2_f) - 0.5 * f.log_det() -
         f.quad_form(eps) / (2.0 * sigma2_f);
}

double profiled_log_likelihood(const Eigen::VectorXd& eps, const Eigen::MatrixXd& phi_n) {
  check_square(eps, phi_n);
  const gp::SpdFactor f(phi_n);
  const double n = static_cast<double>(eps.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi / n * f.quad_form(eps)) - 0.5 * f.log_det() - 0.5 * n;
}

double kog_value(const Eigen::VectorXd& eps, const gp::SpdFactor& phi_n) {
  const double n = static_cast<double>(eps.size());
  return std::exp(phi_n.log_det() / n) * phi_n.quad_form(eps);
}

double kog_value(const Eigen::VectorXd& eps, const Eigen::MatrixXd& phi_n) {
  check_square(eps, phi_n);
  return kog_value(eps, gp::SpdFactor(phi_n));
}

double likelihood_from_kog(double J, std::size_t n) {
  const double nn = static_cast<double>(n);
  return -0.5 * nn * (1.0 + std::log(2.0 * std::numbers::pi * J / nn));
}

double ls_value(const Eigen::VectorXd& eps) { return eps.squaredNorm(); }

const char* to_string(ObjectiveKind k) { return k == ObjectiveKind::kog ? "kog" : "ls"; }

void validate(const EstimationProblem& p) {
  if (p.targets.empty()) throw ConfigError("targets", "at least one target parameter is required");
  for (const auto& t : p.targets) {
    const std::string key = "targets." + std::string(target_name(t.target));
    if (!std::isfinite(t.lower) || !std::isfinite(t.upper) || !(t.lower < t.upper))
      throw ConfigError(key, key + ": bounds must be finite with lower < upper");
    if (is_log_scaled(t.target) && !(t.lower > 0.0)) throw ConfigError(key, key + ": log-scaled bounds must be positive");
    if (is_volume_fraction(t.target) && !(t.lower > 0.0 && t.upper < 1.0))
      throw ConfigError(key, key + ": volume fraction bounds must lie inside (0, 1)");
  }
  if (p.measured.size() != p.profile.size())
    throw ConfigError("measured", "measurement length does not match the current profile");
  if (p.downsample < 1 || p.downsample > p.measured.size())
    throw ConfigError("downsample", "downsample budget " + std::to_string(p.downsample) +
                                        " must lie in [1, sequence length " + std::to_string(p.measured.size()) + "]");
  if (!(p.sigma2_n_tilde >= 0.0)) throw ConfigError("sigma2_n_tilde", "sigma2_n_tilde must be nonnegative");
  if (!(p.length_scale_min > 0.0 && p.length_scale_min < p.length_scale_max))
    throw ConfigError("length_scale_bounds", "length-scale bounds must satisfy 0 < min < max");
}

namespace {

std::optional<ErrorVector> retained_error(std::span<const double> theta, const EstimationProblem& problem) {
  Cell cell = problem.cell;
  for (std::size_t i = 0; i < problem.targets.size(); ++i) set(cell.params, problem.targets[i].target, theta[i]);
  try {
    const Trajectory traj = simulate(problem.profile, cell, problem.initial_soc);
    if (traj.truncated()) return std::nullopt;
    return downsample(model_error(problem.measured, traj), problem.downsample);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

std::optional<KogEvaluation> evaluate_kog(const Candidate& candidate, const EstimationProblem& problem) {
  if (candidate.theta.size() != problem.targets.size())
    throw DimensionError("candidate parameter count does not match the problem targets");
  if (candidate.length_scales.size() != static_cast<Eigen::Index>(kFeatureCount))
    throw DimensionError("candidate needs one length scale per feature");
  const auto err = retained_error(candidate.theta, problem);
  if (!err) return std::nullopt;

  KogEvaluation ev;
  ev.n = err->size();
  const double n = static_cast<double>(ev.n);
  try {
    Eigen::MatrixXd phi_n;
    if (problem.force_identity_covariance) {
      phi_n = Eigen::MatrixXd::Identity(err->eps.size(), err->eps.size());
    } else {
      gp::KernelHyperparameters hp;
      hp.length_scales = candidate.length_scales;
      hp.sigma2_n_tilde = problem.sigma2_n_tilde;
      const auto scaler = gp::FeatureScaler::fit(err->features);
      phi_n = gp::build_phi_n(scaler.apply(err->features), hp);
    }
    const gp::SpdFactor factor(phi_n);
    ev.log_det = factor.log_det();
    ev.quad = factor.quad_form(err->eps);
  } catch (const Error&) {
    return std::nullopt;
  }
  ev.J = std::exp(ev.log_det / n) * ev.quad;
  ev.sigma2_f = ev.quad / n;
  if (!std::isfinite(ev.J)) return std::nullopt;
  return ev;
}

std::optional<double> evaluate_ls(std::span<const double> theta, const EstimationProblem& problem) {
  if (theta.size() != problem.targets.size())
    throw DimensionError("candidate parameter count does not match the problem targets");
  const auto err = retained_error(theta, problem);
  if (!err) return std::nullopt;
  const double J = ls_value(err->eps);
  if (!std::isfinite(J)) return std::nullopt;
  return J;
}

double objective_kog(const Candidate& candidate, const EstimationProblem& problem) {
  const auto ev = evaluate_kog(candidate, problem);
  return ev ? ev->J : kFallbackPenalty;
}

double objective_ls(std::span<const double> theta, const EstimationProblem& problem) {
  return evaluate_ls(theta, problem).value_or(kFallbackPenalty);
}

namespace {

// Search-space coordinates: log10 for diffusion coefficients and length scales.
struct SearchSpace {
  std::vector<pso::Bound> bounds;
  std::vector<bool> log10;
  std::size_t n_theta = 0;

  double decode(std::size_t d, double x) const { return log10[d] ? std::pow(10.0, x) : x; }

  Candidate candidate(std::span<const double> x) const {
    Candidate c;
    c.theta.resize(n_theta);
    for (std::size_t d = 0; d < n_theta; ++d) c.theta[d] = decode(d, x[d]);
    const std::size_t n_ls = x.size() - n_theta;
    c.length_scales.resize(static_cast<Eigen::Index>(n_ls));
    for (std::size_t j = 0; j < n_ls; ++j) c.length_scales[j] = decode(n_theta + j, x[n_theta + j]);
    return c;
  }
};

SearchSpace search_space(const EstimationProblem& p) {
  SearchSpace s;
  s.n_theta = p.targets.size();
  for (const auto& t : p.targets) {
    const bool lg = is_log_scaled(t.target);
    s.log10.push_back(lg);
    s.bounds.push_back(lg ? pso::Bound{std::log10(t.lower), std::log10(t.upper)} : pso::Bound{t.lower, t.upper});
  }
  if (p.objective == ObjectiveKind::kog)
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      s.log10.push_back(true);
      s.bounds.push_back({std::log10(p.length_scale_min), std::log10(p.length_scale_max)});
    }
  return s;
}

}  // namespace

EstimationResult estimate_group(const EstimationProblem& problem, const pso::SwarmConfig& swarm) {
  validate(problem);
  validate(problem.cell.params);
  const auto start = std::chrono::steady_clock::now();
  const SearchSpace space = search_space(problem);

  pso::Objective f;
  if (problem.objective == ObjectiveKind::kog) {
    f = [&](std::span<const double> x) -> std::optional<double> {
      const auto ev = evaluate_kog(space.candidate(x), problem);
      return ev ? std::optional<double>(ev->J) : std::nullopt;
    };
  } else {
    f = [&](std::span<const double> x) { return evaluate_ls(space.candidate(x).theta, problem); };
  }
  const auto run = pso::minimize(f, space.bounds, swarm);
  if (run.feasible_evaluations == 0) {
    EstimationError e("no feasible candidate found: every simulation failed or truncated");
    e.best_trace = run.best_trace;
    e.mean_trace = run.mean_trace;
    throw e;
  }

  EstimationResult r;
  r.objective = problem.objective;
  const Candidate best = space.candidate(run.best_point);
  for (const auto& t : problem.targets) r.targets.push_back(t.target);
  r.theta = best.theta;
  r.parameters = problem.cell.params;
  for (std::size_t i = 0; i < r.targets.size(); ++i) set(r.parameters, r.targets[i], r.theta[i]);
  r.J = run.best_value;
  r.best_trace = run.best_trace;
  r.mean_trace = run.mean_trace;
  r.penalty = run.penalty;
  r.max_feasible_J = run.max_feasible_value;
  r.feasible_evaluations = run.feasible_evaluations;
  r.infeasible_evaluations = run.infeasible_evaluations;
  r.sigma2_n_tilde = problem.sigma2_n_tilde;
  if (problem.objective == ObjectiveKind::kog) {
    r.length_scales = best.length_scales;
    if (const auto ev = evaluate_kog(best, problem)) r.sigma2_f = ev->sigma2_f;
  }
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

SequentialResult sequential_estimate(const std::vector<EstimationProblem>& groups, const CellParameters& initial,
                                     int iterations, const pso::SwarmConfig& swarm) {
  if (groups.empty()) throw ConfigError("groups", "at least one estimation group is required");
  if (iterations < 1) throw ConfigError("iterations", "iterations must be at least 1");
  SequentialResult out;
  CellParameters snapshot = initial;
  std::vector<bool> estimated(groups.size(), false);
  SequentialStep last_failure;
  for (int it = 0; it < iterations; ++it)
    for (std::size_t g = 0; g < groups.size(); ++g) {
      EstimationProblem problem = groups[g];
      problem.cell.params = snapshot;
      pso::SwarmConfig cfg = swarm;
      cfg.seed = swarm.seed + 1000 * static_cast<std::uint64_t>(it) + g;
      SequentialStep s;
      s.iteration = it;
      s.group = g;
      s.snapshot_before = snapshot;
      const std::string where = "group " + std::to_string(g) + ", iteration " + std::to_string(it) + ": ";
      try {
        s.result = estimate_group(problem, cfg);
        estimated[g] = true;
        snapshot = s.result.parameters;
      } catch (const EstimationError& e) {
        s.skipped = true;
        s.skip_reason = where + e.what();
        s.result.objective = problem.objective;
        s.result.parameters = snapshot;
        s.result.best_trace = e.best_trace;
        s.result.mean_trace = e.mean_trace;
        last_failure = s;
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw EstimationError(where + e.what());
      }
      out.steps.push_back(std::move(s));
    }
  for (std::size_t g = 0; g < groups.size(); ++g)
    if (!estimated[g]) {
      EstimationError e("group " + std::to_string(g) + " was never estimated; last failure: " +
                        last_failure.skip_reason);
      e.best_trace = last_failure.result.best_trace;
      e.mean_trace = last_failure.result.mean_trace;
      throw e;
    }
  out.final_parameters = snapshot;
  return out;
}

}  // namespace spme::est

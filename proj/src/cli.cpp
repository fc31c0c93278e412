#include "spme/cli.hpp"

#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "spme/errors.hpp"
#include "spme/io.hpp"

namespace spme::cli {

using io::Json;
using io::ObjectReader;

namespace {

struct LoadedConfig {
  Json json;
  fs::path dir;
};

LoadedConfig load(const fs::path& config) {
  LoadedConfig c{io::read_json_file(config), config.parent_path()};
  if (c.dir.empty()) c.dir = ".";
  return c;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path = p;
  return path.is_relative() ? base / path : path;
}

double initial_soc(ObjectReader& r) {
  const double soc = r.number("initial_soc", 1.0);
  if (!(soc >= 0.0 && soc <= 1.0)) throw ConfigError(r.key_path("initial_soc"), "initial_soc: must lie in [0, 1]");
  return soc;
}

std::string csv_text(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

}  // namespace

Truncation cmd_simulate(const fs::path& config, const fs::path& out_csv) {
  const auto cfg = load(config);
  ObjectReader r(cfg.json, "");
  const Cell cell = io::resolve_cell(r.at("cell"), "cell", cfg.dir);
  const auto spec = io::profile_from_json(r.at("profile"), "profile");
  const double soc = initial_soc(r);
  SimulationOptions options;
  if (r.has("options")) {
    ObjectReader o(r.at("options"), "options");
    options.substeps = static_cast<int>(o.integer("substeps", options.substeps));
    if (options.substeps < 1) throw ConfigError("options.substeps", "options.substeps: must be at least 1");
    options.enforce_cutoff = o.boolean("enforce_cutoff", options.enforce_cutoff);
    o.finish();
  }
  r.finish();

  const auto profile = scenario::build_profile(spec, cell.params.capacity_nominal_Ah);
  const auto traj = simulate(profile, cell, soc, options);
  io::write_text_file(out_csv, csv_text([&](std::ostream& os) { io::write_trajectory_csv(os, traj); }));
  return traj.truncation;
}

scenario::Dataset cmd_generate(const fs::path& config, const fs::path& out_csv,
                               std::optional<std::uint64_t> noise_seed) {
  const auto cfg = load(config);
  ObjectReader r(cfg.json, "");
  auto truth = io::truth_from_json(r.at("truth"), "truth", cfg.dir);
  const auto spec = io::profile_from_json(r.at("profile"), "profile");
  const double soc = initial_soc(r);
  const std::uint64_t stream = r.seed("stream", 0);
  r.finish();
  if (noise_seed) truth.noise.seed = *noise_seed;

  const auto profile = scenario::build_profile(spec, truth.cell.params.capacity_nominal_Ah);
  const auto data = scenario::truth_generate(truth, profile, soc, stream);

  Json sidecar;
  sidecar["truth"] = io::to_json(truth);
  sidecar["profile"] = io::to_json(spec);
  sidecar["initial_soc"] = soc;
  sidecar["stream"] = stream;
  io::write_text_file(out_csv, csv_text([&](std::ostream& os) { io::write_dataset_csv(os, data); }));
  fs::path side = out_csv;
  side.replace_extension(".json");
  io::write_text_file(side, io::dump(sidecar));
  return data;
}

est::EstimationResult cmd_estimate(const fs::path& config, const fs::path& out_dir,
                                   std::optional<std::uint64_t> swarm_seed) {
  const auto cfg = load(config);
  ObjectReader r(cfg.json, "");
  est::EstimationProblem problem;
  problem.cell = io::resolve_cell(r.at("cell"), "cell", cfg.dir);
  const fs::path dataset = resolve(cfg.dir, r.string("dataset"));
  const auto table = io::read_dataset_csv(dataset);
  problem.profile = profile_from_samples(table.time, table.current);
  problem.measured = table.measured;
  problem.initial_soc = initial_soc(r);
  problem.objective = io::objective_from_string(r.string("objective", "kog"), "objective");

  if (r.has("initial_values")) {
    ObjectReader iv(r.at("initial_values"), "initial_values");
    for (Target t : kAllTargets)
      if (iv.has(target_name(t))) set(problem.cell.params, t, iv.number(target_name(t)));
    iv.finish();
    validate(problem.cell.params);
  }
  double lo_factor = 0.25, hi_factor = 50.0;
  if (r.has("bound_factors")) {
    const auto f = r.numbers("bound_factors");
    if (f.size() != 2 || !(f[0] > 0.0 && f[0] < 1.0 && f[1] > 1.0))
      throw ConfigError("bound_factors", "bound_factors: expected [lo, hi] with 0 < lo < 1 < hi");
    lo_factor = f[0];
    hi_factor = f[1];
  }
  {
    const Json& ts = r.at("targets");
    if (!ts.is_array() || ts.empty()) throw ConfigError("targets", "targets: expected a nonempty array");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string key = "targets[" + std::to_string(i) + "]";
      // Either a bare name (default bounds) or {name, lower, upper}.
      if (ts[i].is_string()) {
        const auto t = io::targets_from_json(Json::array({ts[i]}), key);
        problem.targets.push_back(
            scenario::default_bound(t[0], get(problem.cell.params, t[0]), lo_factor, hi_factor));
      } else {
        ObjectReader tr(ts[i], key);
        const auto t = io::targets_from_json(Json::array({tr.at("name")}), tr.key_path("name"));
        auto b = scenario::default_bound(t[0], get(problem.cell.params, t[0]), lo_factor, hi_factor);
        b.lower = tr.number("lower", b.lower);
        b.upper = tr.number("upper", b.upper);
        tr.finish();
        problem.targets.push_back(b);
      }
    }
  }
  const long long m = r.integer("downsample", static_cast<long long>(problem.downsample));
  if (m < 1) throw ConfigError("downsample", "downsample: budget must be at least 1");
  problem.downsample = static_cast<std::size_t>(m);
  problem.sigma2_n_tilde = r.number("sigma2_n_tilde", problem.sigma2_n_tilde);
  if (r.has("length_scale_bounds")) {
    const auto b = r.numbers("length_scale_bounds");
    if (b.size() != 2 || !(b[0] > 0.0 && b[0] < b[1]))
      throw ConfigError("length_scale_bounds", "length_scale_bounds: expected [lo, hi] with 0 < lo < hi");
    problem.length_scale_min = b[0];
    problem.length_scale_max = b[1];
  }
  pso::SwarmConfig swarm;
  if (r.has("swarm")) swarm = io::swarm_from_json(r.at("swarm"), "swarm");
  r.finish();
  if (swarm_seed) swarm.seed = *swarm_seed;
  est::validate(problem);

  est::EstimationResult result;
  try {
    result = est::estimate_group(problem, swarm);
  } catch (const EstimationError& e) {
    io::write_text_file(out_dir / "trace.csv",
                        csv_text([&](std::ostream& os) { io::write_trace_csv(os, e.best_trace, e.mean_trace); }));
    throw;
  }

  Json report = io::to_json(result);
  report["swarm"] = io::to_json(swarm);
  report["downsample"] = problem.downsample;
  report["dataset"] = dataset.string();
  io::write_text_file(out_dir / "estimate.json", io::dump(report));
  io::write_text_file(out_dir / "trace.csv", csv_text([&](std::ostream& os) {
                        io::write_trace_csv(os, result.best_trace, result.mean_trace);
                      }));
  if (problem.objective == est::ObjectiveKind::kog) {
    // Refit the scaler on the same retained samples the objective used.
    Cell fitted = problem.cell;
    fitted.params = result.parameters;
    const auto traj = simulate(problem.profile, fitted, problem.initial_soc);
    const auto err = est::downsample(est::model_error(problem.measured, traj), problem.downsample);
    gp::KernelHyperparameters hp;
    hp.sigma2_f = result.sigma2_f;
    hp.length_scales = result.length_scales;
    hp.sigma2_n_tilde = result.sigma2_n_tilde;
    io::write_text_file(out_dir / "residual_model.json", io::dump(io::to_json(gp::FeatureScaler::fit(err.features), hp)));
  }
  return result;
}

scenario::ExperimentReport cmd_experiment(const fs::path& config, const fs::path& out_dir,
                                          std::optional<std::size_t> trials, std::optional<std::uint64_t> seed) {
  const auto cfg = load(config);
  ObjectReader r(cfg.json, "");
  const auto truth = io::truth_from_json(r.at("truth"), "truth", cfg.dir);
  auto trial = r.has("trial") ? io::trial_from_json(r.at("trial"), "trial") : scenario::TrialSpec{};
  long long n = r.integer("n_trials", 1);
  r.finish();
  if (trials) n = static_cast<long long>(*trials);
  if (n < 1) throw ConfigError("n_trials", "n_trials: must be at least 1");
  if (seed) trial.seed = *seed;

  const auto report = scenario::run_experiment(truth, trial, static_cast<std::size_t>(n));

  Json resolved;
  resolved["truth"] = io::to_json(truth);
  resolved["trial"] = io::to_json(trial);
  resolved["n_trials"] = n;
  Json seeds;
  seeds["trials"] = Json::array();
  for (const auto& s : report.seeds)
    seeds["trials"].push_back(
        {{"trial", s.trial}, {"error_seed", s.error_seed}, {"noise_seed", s.noise_seed}, {"swarm_seed", s.swarm_seed}});
  seeds["failed_trials"] = report.failed_trials;
  seeds["warnings"] = report.warnings;

  io::write_text_file(out_dir / "config.json", io::dump(resolved));
  io::write_text_file(out_dir / "seeds.json", io::dump(seeds));
  io::write_text_file(out_dir / "parameters.csv",
                      csv_text([&](std::ostream& os) { io::write_parameter_rows_csv(os, report); }));
  io::write_text_file(out_dir / "rmse.csv", csv_text([&](std::ostream& os) { io::write_rmse_rows_csv(os, report); }));
  io::write_text_file(out_dir / "aggregates.csv",
                      csv_text([&](std::ostream& os) { io::write_aggregates_csv(os, report); }));
  io::write_text_file(out_dir / "report.txt", scenario::render_report(report));
  if (report.failed_trials == static_cast<std::size_t>(n)) throw EstimationError("every trial failed");
  return report;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SPMe simulation and parameter estimation"};
  app.require_subcommand(1);

  std::string config, output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;

  auto* sim = app.add_subcommand("simulate", "Simulate a cell on a current profile");
  sim->add_option("-c,--config", config, "simulate config (JSON)")->required();
  sim->add_option("-o,--out", output, "trajectory CSV")->required();

  auto* gen = app.add_subcommand("generate", "Generate a synthetic measurement dataset");
  gen->add_option("-c,--config", config, "generate config (JSON)")->required();
  gen->add_option("-o,--out", output, "dataset CSV; the sidecar goes next to it")->required();
  gen->add_option("--seed", seed, "override the noise seed");

  auto* estc = app.add_subcommand("estimate", "Estimate parameters from a dataset");
  estc->add_option("-c,--config", config, "estimate config (JSON)")->required();
  estc->add_option("-o,--out-dir", output, "output directory")->required();
  estc->add_option("--seed", seed, "override the swarm seed");

  auto* exp = app.add_subcommand("experiment", "Run the randomized initial-error study");
  exp->add_option("-c,--config", config, "experiment config (JSON)")->required();
  exp->add_option("-o,--out-dir", output, "output directory")->required();
  exp->add_option("--seed", seed, "override the trial seed");
  exp->add_option("--trials", trials, "override the number of trials")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) {
      const auto t = cmd_simulate(config, output);
      if (t != Truncation::none) err << "note: simulation truncated (" << to_string(t) << ")\n";
      out << "wrote " << output << "\n";
    } else if (gen->parsed()) {
      cmd_generate(config, output, seed);
      out << "wrote " << output << "\n";
    } else if (estc->parsed()) {
      const auto res = cmd_estimate(config, output, seed);
      out << est::to_string(res.objective) << " J = " << io::format_number(res.J) << "\n";
      for (std::size_t i = 0; i < res.targets.size(); ++i)
        out << "  " << target_name(res.targets[i]) << " = " << io::format_number(res.theta[i]) << "\n";
    } else if (exp->parsed()) {
      const auto rep = cmd_experiment(config, output, trials, seed);
      out << scenario::render_report(rep);
      if (rep.failed_trials > 0) err << "warning: " << rep.failed_trials << " trial(s) failed\n";
    }
  } catch (const ConfigError& e) {
    err << "config error [" << e.key << "]: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace spme::cli

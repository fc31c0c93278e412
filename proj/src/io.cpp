#include "spme/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "spme/errors.hpp"

namespace spme::io {

namespace fs = std::filesystem;

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) { throw ConfigError(key, key + ": " + what); }

const char* type_name(const Json& j) { return j.type_name(); }

}  // namespace

ObjectReader::ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, std::string("expected an object, got ") + type_name(j_));
}

std::string ObjectReader::key_path(std::string_view key) const {
  return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
}

bool ObjectReader::has(std::string_view key) const { return j_.contains(std::string(key)); }

const Json& ObjectReader::at(std::string_view key) {
  const std::string k(key);
  if (!j_.contains(k)) fail(key_path(key), "missing required key");
  used_.push_back(k);
  return j_.at(k);
}

double ObjectReader::number(std::string_view key) {
  const Json& v = at(key);
  if (!v.is_number()) fail(key_path(key), std::string("expected a number, got ") + type_name(v));
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(key_path(key), "value must be finite");
  return x;
}

double ObjectReader::number(std::string_view key, double fallback) { return has(key) ? number(key) : fallback; }

long long ObjectReader::integer(std::string_view key) {
  const Json& v = at(key);
  if (!v.is_number_integer()) fail(key_path(key), std::string("expected an integer, got ") + type_name(v));
  return v.get<long long>();
}

long long ObjectReader::integer(std::string_view key, long long fallback) { return has(key) ? integer(key) : fallback; }

std::uint64_t ObjectReader::seed(std::string_view key) {
  const Json& v = at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  fail(key_path(key), "expected a nonnegative integer seed");
}

std::uint64_t ObjectReader::seed(std::string_view key, std::uint64_t fallback) {
  return has(key) ? seed(key) : fallback;
}

std::string ObjectReader::string(std::string_view key) {
  const Json& v = at(key);
  if (!v.is_string()) fail(key_path(key), std::string("expected a string, got ") + type_name(v));
  return v.get<std::string>();
}

std::string ObjectReader::string(std::string_view key, std::string fallback) {
  return has(key) ? string(key) : fallback;
}

bool ObjectReader::boolean(std::string_view key, bool fallback) {
  if (!has(key)) return fallback;
  const Json& v = at(key);
  if (!v.is_boolean()) fail(key_path(key), std::string("expected a boolean, got ") + type_name(v));
  return v.get<bool>();
}

std::vector<double> ObjectReader::numbers(std::string_view key) {
  const Json& v = at(key);
  if (!v.is_array()) fail(key_path(key), std::string("expected an array, got ") + type_name(v));
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(key_path(key) + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

void ObjectReader::finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it)
    if (std::find(used_.begin(), used_.end(), it.key()) == used_.end()) fail(key_path(it.key()), "unknown key");
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string(), path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---- cell --------------------------------------------------------------

namespace {

// Name/member table shared by reader and writer.
struct ParamField {
  const char* name;
  double CellParameters::*member;
};

constexpr ParamField kParamFields[] = {
    {"eps_s_n", &CellParameters::eps_s_n},
    {"eps_s_p", &CellParameters::eps_s_p},
    {"D_s_n", &CellParameters::D_s_n},
    {"D_s_p", &CellParameters::D_s_p},
    {"D_e", &CellParameters::D_e},
    {"eps_e", &CellParameters::eps_e},
    {"R_l", &CellParameters::R_l},
    {"radius_n", &CellParameters::radius_n},
    {"radius_p", &CellParameters::radius_p},
    {"thickness_n", &CellParameters::thickness_n},
    {"thickness_sep", &CellParameters::thickness_sep},
    {"thickness_p", &CellParameters::thickness_p},
    {"area", &CellParameters::area},
    {"c_s_max_n", &CellParameters::c_s_max_n},
    {"c_s_max_p", &CellParameters::c_s_max_p},
    {"c_e_init", &CellParameters::c_e_init},
    {"transference", &CellParameters::transference},
    {"k_n", &CellParameters::k_n},
    {"k_p", &CellParameters::k_p},
    {"kappa_e", &CellParameters::kappa_e},
    {"bruggeman", &CellParameters::bruggeman},
    {"stoich_n_min", &CellParameters::stoich_n_min},
    {"stoich_n_max", &CellParameters::stoich_n_max},
    {"stoich_p_min", &CellParameters::stoich_p_min},
    {"stoich_p_max", &CellParameters::stoich_p_max},
    {"capacity_nominal_Ah", &CellParameters::capacity_nominal_Ah},
    {"temperature_K", &CellParameters::temperature_K},
};

Json ocv_to_json(const OcvCurve& c) {
  Json j;
  j["constant"] = c.constant;
  j["linear"] = c.linear;
  j["exp_terms"] = Json::array();
  for (const auto& t : c.exp_terms) j["exp_terms"].push_back({{"a", t.a}, {"b", t.b}});
  j["tanh_terms"] = Json::array();
  for (const auto& t : c.tanh_terms) j["tanh_terms"].push_back({{"a", t.a}, {"b", t.b}, {"m", t.m}});
  return j;
}

OcvCurve ocv_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  OcvCurve c;
  c.constant = r.number("constant");
  c.linear = r.number("linear", 0.0);
  if (r.has("exp_terms")) {
    const Json& terms = r.at("exp_terms");
    if (!terms.is_array()) fail(r.key_path("exp_terms"), "expected an array");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      ObjectReader t(terms[i], r.key_path("exp_terms") + "[" + std::to_string(i) + "]");
      c.exp_terms.push_back({t.number("a"), t.number("b")});
      t.finish();
    }
  }
  if (r.has("tanh_terms")) {
    const Json& terms = r.at("tanh_terms");
    if (!terms.is_array()) fail(r.key_path("tanh_terms"), "expected an array");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      ObjectReader t(terms[i], r.key_path("tanh_terms") + "[" + std::to_string(i) + "]");
      c.tanh_terms.push_back({t.number("a"), t.number("b"), t.number("m")});
      t.finish();
    }
  }
  r.finish();
  return c;
}

}  // namespace

Json to_json(const Cell& cell) {
  Json j;
  Json& p = j["parameters"];
  for (const auto& f : kParamFields) p[f.name] = cell.params.*f.member;
  j["ocv"] = {{"anode", ocv_to_json(cell.ocv.anode)}, {"cathode", ocv_to_json(cell.ocv.cathode)}};
  j["discretization"] = {{"radial_nodes", cell.grid.radial_nodes},
                         {"electrolyte_nodes_per_region", cell.grid.electrolyte_nodes_per_region}};
  j["cutoff"] = {{"min_V", cell.cutoff.min_V}, {"max_V", cell.cutoff.max_V}};
  return j;
}

Cell cell_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  Cell cell;
  {
    ObjectReader p(r.at("parameters"), r.key_path("parameters"));
    for (const auto& f : kParamFields) cell.params.*f.member = p.number(f.name);
    p.finish();
  }
  try {
    validate(cell.params);
  } catch (const ConfigError& e) {
    throw ConfigError(path.empty() ? e.key : path + "." + e.key, e.what());
  }
  {
    ObjectReader o(r.at("ocv"), r.key_path("ocv"));
    cell.ocv.anode = ocv_from_json(o.at("anode"), o.key_path("anode"));
    cell.ocv.cathode = ocv_from_json(o.at("cathode"), o.key_path("cathode"));
    o.finish();
  }
  if (r.has("discretization")) {
    ObjectReader d(r.at("discretization"), r.key_path("discretization"));
    cell.grid.radial_nodes = static_cast<int>(d.integer("radial_nodes", cell.grid.radial_nodes));
    cell.grid.electrolyte_nodes_per_region =
        static_cast<int>(d.integer("electrolyte_nodes_per_region", cell.grid.electrolyte_nodes_per_region));
    if (cell.grid.radial_nodes < 2) fail(d.key_path("radial_nodes"), "need at least 2 radial nodes");
    if (cell.grid.electrolyte_nodes_per_region < 1)
      fail(d.key_path("electrolyte_nodes_per_region"), "need at least 1 node per region");
    d.finish();
  }
  if (r.has("cutoff")) {
    ObjectReader c(r.at("cutoff"), r.key_path("cutoff"));
    cell.cutoff.min_V = c.number("min_V", cell.cutoff.min_V);
    cell.cutoff.max_V = c.number("max_V", cell.cutoff.max_V);
    if (!(cell.cutoff.min_V < cell.cutoff.max_V)) fail(c.key_path("min_V"), "min_V must be below max_V");
    c.finish();
  }
  r.finish();
  return cell;
}

Cell resolve_cell(const Json& value, const std::string& path, const fs::path& base_dir) {
  if (value.is_string()) {
    fs::path file = value.get<std::string>();
    if (file.is_relative()) file = base_dir / file;
    return cell_from_json(read_json_file(file), "");
  }
  return cell_from_json(value, path);
}

// ---- swarm -------------------------------------------------------------

Json to_json(const pso::SwarmConfig& c) {
  return {{"particles", c.particles},       {"iterations", c.iterations},
          {"inertia", c.inertia},           {"cognitive", c.cognitive},
          {"social", c.social},             {"velocity_clamp", c.velocity_clamp},
          {"seed", c.seed},                 {"penalty_factor", c.penalty_factor},
          {"fallback_penalty", c.fallback_penalty}, {"parallel", c.parallel}};
}

pso::SwarmConfig swarm_from_json(const Json& j, const std::string& path, const pso::SwarmConfig& base) {
  ObjectReader r(j, path);
  pso::SwarmConfig c = base;
  const auto count = [&](std::string_view key, std::size_t fallback) {
    const long long v = r.integer(key, static_cast<long long>(fallback));
    if (v < 1) fail(r.key_path(key), "must be at least 1");
    return static_cast<std::size_t>(v);
  };
  c.particles = count("particles", c.particles);
  c.iterations = count("iterations", c.iterations);
  c.inertia = r.number("inertia", c.inertia);
  c.cognitive = r.number("cognitive", c.cognitive);
  c.social = r.number("social", c.social);
  c.velocity_clamp = r.number("velocity_clamp", c.velocity_clamp);
  c.seed = r.seed("seed", c.seed);
  c.penalty_factor = r.number("penalty_factor", c.penalty_factor);
  c.fallback_penalty = r.number("fallback_penalty", c.fallback_penalty);
  c.parallel = r.boolean("parallel", c.parallel);
  r.finish();
  try {
    pso::validate(c);
  } catch (const ContractViolation& e) {
    fail(path, e.what());
  }
  return c;
}

// ---- scenario ----------------------------------------------------------

const char* to_string(scenario::ProfileKind kind) {
  return kind == scenario::ProfileKind::pulse ? "pulse" : "cc_discharge";
}

const char* to_string(scenario::TruthMode mode) {
  return mode == scenario::TruthMode::fine_spme ? "fine_spme" : "spme_plus_discrepancy";
}

scenario::TruthMode truth_mode_from_string(std::string_view name, const std::string& path) {
  if (name == "fine_spme") return scenario::TruthMode::fine_spme;
  if (name == "spme_plus_discrepancy") return scenario::TruthMode::spme_plus_discrepancy;
  fail(path, "unknown truth mode '" + std::string(name) + "' (fine_spme | spme_plus_discrepancy)");
}

est::ObjectiveKind objective_from_string(std::string_view name, const std::string& path) {
  if (name == "kog") return est::ObjectiveKind::kog;
  if (name == "ls") return est::ObjectiveKind::ls;
  fail(path, "unknown objective '" + std::string(name) + "' (kog | ls)");
}

Json to_json(const scenario::ProfileSpec& s) {
  Json j;
  j["kind"] = to_string(s.kind);
  j["rate_c"] = s.rate_c;
  if (s.kind == scenario::ProfileKind::pulse) j["freq_hz"] = s.freq_hz;
  j["duration_s"] = s.duration_s;
  j["dt_s"] = s.dt_s;
  return j;
}

scenario::ProfileSpec profile_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  scenario::ProfileSpec s;
  const std::string kind = r.string("kind");
  if (kind == "cc_discharge") {
    s.kind = scenario::ProfileKind::cc_discharge;
  } else if (kind == "pulse") {
    s.kind = scenario::ProfileKind::pulse;
    s.freq_hz = r.number("freq_hz");
    if (!(s.freq_hz > 0.0)) fail(r.key_path("freq_hz"), "pulse frequency must be positive");
  } else {
    fail(r.key_path("kind"), "unknown profile kind '" + kind + "' (cc_discharge | pulse)");
  }
  s.rate_c = r.number("rate_c");
  s.duration_s = r.number("duration_s");
  s.dt_s = r.number("dt_s", 1.0);
  if (!(s.duration_s > 0.0)) fail(r.key_path("duration_s"), "duration must be positive");
  if (!(s.dt_s > 0.0)) fail(r.key_path("dt_s"), "time step must be positive");
  if (s.duration_s < s.dt_s) fail(r.key_path("duration_s"), "duration shorter than one time step");
  r.finish();
  return s;
}

Json to_json(const scenario::NoiseSpec& n) { return {{"mean_V", n.mean_V}, {"std_V", n.std_V}, {"seed", n.seed}}; }

Json to_json(const scenario::TruthSpec& s) {
  Json j;
  j["cell"] = to_json(s.cell);
  j["mode"] = to_string(s.mode);
  j["discrepancy_amplitude_V"] = s.discrepancy_amplitude_V;
  j["noise"] = to_json(s.noise);
  j["fine"] = {{"radial_nodes", s.fine_radial_nodes},
               {"electrolyte_nodes_per_region", s.fine_electrolyte_nodes},
               {"substeps", s.fine_substeps}};
  return j;
}

scenario::TruthSpec truth_from_json(const Json& j, const std::string& path, const fs::path& base_dir) {
  ObjectReader r(j, path);
  scenario::TruthSpec s;
  s.cell = r.has("cell") ? resolve_cell(r.at("cell"), r.key_path("cell"), base_dir) : default_cell();
  s.mode = truth_mode_from_string(r.string("mode", to_string(s.mode)), r.key_path("mode"));
  s.discrepancy_amplitude_V = r.number("discrepancy_amplitude_V", s.discrepancy_amplitude_V);
  if (r.has("noise")) {
    ObjectReader n(r.at("noise"), r.key_path("noise"));
    s.noise.mean_V = n.number("mean_V", s.noise.mean_V);
    s.noise.std_V = n.number("std_V", s.noise.std_V);
    s.noise.seed = n.seed("seed", s.noise.seed);
    if (!(s.noise.std_V >= 0.0)) fail(n.key_path("std_V"), "noise std must be nonnegative");
    n.finish();
  }
  if (r.has("fine")) {
    ObjectReader f(r.at("fine"), r.key_path("fine"));
    s.fine_radial_nodes = static_cast<int>(f.integer("radial_nodes", s.fine_radial_nodes));
    s.fine_electrolyte_nodes = static_cast<int>(f.integer("electrolyte_nodes_per_region", s.fine_electrolyte_nodes));
    s.fine_substeps = static_cast<int>(f.integer("substeps", s.fine_substeps));
    if (s.fine_radial_nodes < 2) fail(f.key_path("radial_nodes"), "need at least 2 radial nodes");
    if (s.fine_electrolyte_nodes < 1) fail(f.key_path("electrolyte_nodes_per_region"), "need at least 1 node");
    if (s.fine_substeps < 1) fail(f.key_path("substeps"), "must be at least 1");
    f.finish();
  }
  r.finish();
  return s;
}

std::vector<Target> targets_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of parameter names");
  std::vector<Target> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string key = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_string()) fail(key, "expected a parameter name");
    const auto t = target_from_name(j[i].get<std::string>());
    if (!t) fail(key, "unknown parameter '" + j[i].get<std::string>() + "'");
    if (std::find(out.begin(), out.end(), *t) != out.end()) fail(key, "duplicate parameter");
    out.push_back(*t);
  }
  return out;
}

namespace {

Json targets_to_json(const std::vector<Target>& ts) {
  Json a = Json::array();
  for (Target t : ts) a.push_back(std::string(target_name(t)));
  return a;
}

}  // namespace

Json to_json(const scenario::TrialSpec& t) {
  Json j;
  j["initial_error_range"] = {t.error_lo, t.error_hi};
  j["groups"] = Json::array();
  for (const auto& g : t.groups)
    j["groups"].push_back({{"label", g.label},
                           {"profile", to_json(g.profile)},
                           {"initial_soc", g.initial_soc},
                           {"targets", targets_to_json(g.targets)}});
  j["perturbed"] = targets_to_json(t.perturbed);
  j["evaluation"] = Json::array();
  for (const auto& e : t.evaluation)
    j["evaluation"].push_back({{"label", e.label}, {"profile", to_json(e.profile)}, {"initial_soc", e.initial_soc}});
  j["iterations"] = t.iterations;
  j["downsample"] = t.downsample;
  j["sigma2_n_tilde"] = t.sigma2_n_tilde;
  j["bound_factors"] = {t.bound_lo_factor, t.bound_hi_factor};
  j["objectives"] = Json::array();
  for (auto o : t.objectives) j["objectives"].push_back(est::to_string(o));
  j["swarm"] = to_json(t.swarm);
  j["seed"] = t.seed;
  return j;
}

scenario::TrialSpec trial_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  scenario::TrialSpec t;
  if (r.has("initial_error_range")) {
    const auto range = r.numbers("initial_error_range");
    if (range.size() != 2) fail(r.key_path("initial_error_range"), "expected [lo, hi]");
    t.error_lo = range[0];
    t.error_hi = range[1];
  }
  if (!(t.error_lo > 0.0 && t.error_lo <= t.error_hi))
    fail(r.key_path("initial_error_range"), "need 0 < lo <= hi");
  if (r.has("groups")) {
    const Json& gs = r.at("groups");
    if (!gs.is_array() || gs.empty()) fail(r.key_path("groups"), "expected a nonempty array");
    t.groups.clear();
    for (std::size_t i = 0; i < gs.size(); ++i) {
      ObjectReader g(gs[i], r.key_path("groups") + "[" + std::to_string(i) + "]");
      scenario::GroupSpec spec;
      spec.label = g.string("label", "group " + std::to_string(i + 1));
      spec.profile = profile_from_json(g.at("profile"), g.key_path("profile"));
      spec.initial_soc = g.number("initial_soc", 1.0);
      spec.targets = targets_from_json(g.at("targets"), g.key_path("targets"));
      if (spec.targets.empty()) fail(g.key_path("targets"), "a group needs at least one target");
      g.finish();
      t.groups.push_back(std::move(spec));
    }
  }
  if (r.has("perturbed")) t.perturbed = targets_from_json(r.at("perturbed"), r.key_path("perturbed"));
  if (r.has("evaluation")) {
    const Json& es = r.at("evaluation");
    if (!es.is_array()) fail(r.key_path("evaluation"), "expected an array");
    for (std::size_t i = 0; i < es.size(); ++i) {
      ObjectReader e(es[i], r.key_path("evaluation") + "[" + std::to_string(i) + "]");
      scenario::EvaluationProfile ev;
      ev.label = e.string("label");
      ev.profile = profile_from_json(e.at("profile"), e.key_path("profile"));
      ev.initial_soc = e.number("initial_soc", 1.0);
      e.finish();
      t.evaluation.push_back(std::move(ev));
    }
  }
  t.iterations = static_cast<int>(r.integer("iterations", t.iterations));
  if (t.iterations < 1) fail(r.key_path("iterations"), "must be at least 1");
  const long long m = r.integer("downsample", static_cast<long long>(t.downsample));
  if (m < 1) fail(r.key_path("downsample"), "downsample budget must be at least 1");
  t.downsample = static_cast<std::size_t>(m);
  t.sigma2_n_tilde = r.number("sigma2_n_tilde", t.sigma2_n_tilde);
  if (!(t.sigma2_n_tilde >= 0.0)) fail(r.key_path("sigma2_n_tilde"), "must be nonnegative");
  if (r.has("bound_factors")) {
    const auto f = r.numbers("bound_factors");
    if (f.size() != 2 || !(f[0] > 0.0 && f[0] < 1.0 && f[1] > 1.0))
      fail(r.key_path("bound_factors"), "expected [lo, hi] with 0 < lo < 1 < hi");
    t.bound_lo_factor = f[0];
    t.bound_hi_factor = f[1];
  }
  if (r.has("objectives")) {
    const Json& os = r.at("objectives");
    if (!os.is_array() || os.empty()) fail(r.key_path("objectives"), "expected a nonempty array");
    t.objectives.clear();
    for (std::size_t i = 0; i < os.size(); ++i) {
      const std::string key = r.key_path("objectives") + "[" + std::to_string(i) + "]";
      if (!os[i].is_string()) fail(key, "expected kog or ls");
      t.objectives.push_back(objective_from_string(os[i].get<std::string>(), key));
    }
  }
  if (r.has("swarm")) t.swarm = swarm_from_json(r.at("swarm"), r.key_path("swarm"), t.swarm);
  t.seed = r.seed("seed", t.seed);
  r.finish();
  return t;
}

// ---- estimation output -------------------------------------------------

Json to_json(const est::EstimationResult& res) {
  Json j;
  j["objective"] = est::to_string(res.objective);
  Json& theta = j["theta"];
  theta = Json::object();
  for (std::size_t i = 0; i < res.targets.size(); ++i) theta[std::string(target_name(res.targets[i]))] = res.theta[i];
  if (res.objective == est::ObjectiveKind::kog) {
    j["length_scales"] = Json::array();
    for (Eigen::Index i = 0; i < res.length_scales.size(); ++i) j["length_scales"].push_back(res.length_scales(i));
    j["sigma2_f"] = res.sigma2_f;
    j["sigma2_n_tilde"] = res.sigma2_n_tilde;
  }
  j["J"] = res.J;
  j["penalty"] = res.penalty;
  j["max_feasible_J"] = res.max_feasible_J;
  j["feasible_evaluations"] = res.feasible_evaluations;
  j["infeasible_evaluations"] = res.infeasible_evaluations;
  j["iterations"] = res.best_trace.size();
  Json& p = j["parameters"];
  for (const auto& f : kParamFields) p[f.name] = res.parameters.*f.member;
  return j;
}

Json to_json(const gp::FeatureScaler& scaler, const gp::KernelHyperparameters& hp) {
  Json j;
  j["features"] = {"current_A", "soc_surf", "soc_bulk", "ce_n_mol_m3"};
  const auto vec = [](const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  j["scaler"] = {{"mean", vec(scaler.mean)}, {"scale", vec(scaler.scale)}};
  j["kernel"] = {{"sigma2_f", hp.sigma2_f},
                 {"length_scales", vec(hp.length_scales)},
                 {"sigma2_n_tilde", hp.sigma2_n_tilde}};
  return j;
}

// ---- CSV ---------------------------------------------------------------

namespace {

void row(std::ostream& os, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) os << ',';
    os << format_number(v);
    first = false;
  }
  os << '\n';
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
  os << "time_s,current_A,voltage_V,soc_surf,soc_bulk,ce_n_mol_m3,ce_p_mol_m3\n";
  for (const auto& r : trajectory.records)
    row(os, {r.time, r.current, r.voltage, r.soc_surf, r.soc_bulk, r.c_e_n, r.c_e_p});
}

void write_dataset_csv(std::ostream& os, const scenario::Dataset& data) {
  os << "time_s,current_A,voltage_true_V,voltage_meas_V\n";
  for (std::size_t k = 0; k < data.profile.size(); ++k)
    row(os, {data.profile.time(k), data.profile.current[k], data.truth[k], data.measured[k]});
}

DatasetTable read_dataset_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string(), path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto column = [&](const std::string& name) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const std::ptrdiff_t ct = column("time_s"), ci = column("current_A"), cv = column("voltage_true_V"),
                       cm = column("voltage_meas_V");
  if (ct < 0) throw ConfigError("time_s", path.string() + ": missing column time_s");
  if (ci < 0) throw ConfigError("current_A", path.string() + ": missing column current_A");
  if (cm < 0) throw ConfigError("voltage_meas_V", path.string() + ": missing column voltage_meas_V");

  DatasetTable t;
  std::size_t line_no = 1;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    values.clear();
    const char* p = line.data();
    const char* end = p + line.size();
    while (true) {
      double v = 0.0;
      const auto r = std::from_chars(p, end, v);
      if (r.ec != std::errc{})
        throw ConfigError(path.string(), path.string() + ":" + std::to_string(line_no) + ": bad number");
      values.push_back(v);
      p = r.ptr;
      if (p == end) break;
      if (*p != ',') throw ConfigError(path.string(), path.string() + ":" + std::to_string(line_no) + ": bad separator");
      ++p;
    }
    if (values.size() != header.size())
      throw ConfigError(path.string(), path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    t.time.push_back(values[ct]);
    t.current.push_back(values[ci]);
    t.measured.push_back(values[cm]);
    if (cv >= 0) t.truth.push_back(values[cv]);
  }
  if (t.time.empty()) throw ConfigError(path.string(), path.string() + ": no data rows");
  return t;
}

void write_trace_csv(std::ostream& os, const std::vector<double>& best, const std::vector<double>& mean) {
  os << "iteration,best_J,mean_J\n";
  for (std::size_t i = 0; i < best.size(); ++i)
    os << i << ',' << format_number(best[i]) << ',' << (i < mean.size() ? format_number(mean[i]) : "") << '\n';
}

void write_parameter_rows_csv(std::ostream& os, const scenario::ExperimentReport& report) {
  os << "trial,parameter,objective,truth,initial,estimate,initial_error_pct,final_error_pct\n";
  for (const auto& r : report.parameters)
    os << r.trial << ',' << target_name(r.target) << ',' << est::to_string(r.objective) << ','
       << format_number(r.truth) << ',' << format_number(r.initial) << ',' << format_number(r.estimate) << ','
       << format_number(r.initial_error_pct) << ',' << format_number(r.final_error_pct) << '\n';
}

void write_rmse_rows_csv(std::ostream& os, const scenario::ExperimentReport& report) {
  os << "trial,objective,profile,rmse_truth_V,rmse_measured_V\n";
  for (const auto& r : report.rmse)
    os << r.trial << ',' << est::to_string(r.objective) << ',' << r.profile << ',' << format_number(r.rmse_truth_V)
       << ',' << format_number(r.rmse_measured_V) << '\n';
}

void write_aggregates_csv(std::ostream& os, const scenario::ExperimentReport& report) {
  os << "parameter,objective,mean_error_pct,std_error_pct,trials\n";
  for (const auto& a : report.aggregates)
    os << target_name(a.target) << ',' << est::to_string(a.objective) << ',' << format_number(a.mean_pct) << ','
       << format_number(a.std_pct) << ',' << a.trials << '\n';
}

}  // namespace spme::io

#include "spme/cell_model.hpp"

#include <cmath>
#include <numeric>

#include "spme/errors.hpp"

namespace spme {

std::vector<double> radial_weights(int nodes) {
  // Vertex-centred control volumes on r in [0, 1]; the outermost node sits on the surface.
  const double dr = 1.0 / (nodes - 1);
  std::vector<double> w(nodes);
  double inner = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double outer = (i == nodes - 1) ? 1.0 : (i + 0.5) * dr;
    w[i] = outer * outer * outer - inner * inner * inner;
    inner = outer;
  }
  return w;
}

double surface_concentration(const std::vector<double>& c_s) { return c_s.back(); }

double bulk_concentration(const std::vector<double>& c_s) {
  const auto w = radial_weights(static_cast<int>(c_s.size()));
  return std::inner_product(w.begin(), w.end(), c_s.begin(), 0.0);
}

namespace {

double weighted_mean(const std::vector<double>& w, const std::vector<double>& c) {
  return std::inner_product(w.begin(), w.end(), c.begin(), 0.0);
}

}  // namespace

namespace {

struct ElectrolyteGrid {
  std::vector<double> width;
  int n_anode = 0;
  int n_sep = 0;
  int n_cathode = 0;
};

ElectrolyteGrid electrolyte_grid(const Cell& cell) {
  const auto& p = cell.params;
  const int m = cell.grid.electrolyte_nodes_per_region;
  ElectrolyteGrid g;
  g.n_anode = g.n_sep = g.n_cathode = m;
  g.width.reserve(3 * m);
  for (int i = 0; i < m; ++i) g.width.push_back(p.thickness_n / m);
  for (int i = 0; i < m; ++i) g.width.push_back(p.thickness_sep / m);
  for (int i = 0; i < m; ++i) g.width.push_back(p.thickness_p / m);
  return g;
}

double anode_stoich(double c, const CellParameters& p) { return c / p.c_s_max_n; }

double soc_from_anode(double c, const CellParameters& p) {
  return (anode_stoich(c, p) - p.stoich_n_min) / (p.stoich_n_max - p.stoich_n_min);
}

}  // namespace

double electrolyte_inventory(const CellState& state, const Cell& cell) {
  const auto g = electrolyte_grid(cell);
  double total = 0.0;
  for (std::size_t i = 0; i < state.c_e.size(); ++i) total += cell.params.eps_e * g.width[i] * state.c_e[i];
  return total;
}

double soc_surf(const CellState& state, const CellParameters& p) {
  return soc_from_anode(surface_concentration(state.c_s_n), p);
}

double soc_bulk(const CellState& state, const CellParameters& p) {
  return soc_from_anode(bulk_concentration(state.c_s_n), p);
}

CellState initial_state(const Cell& cell, double soc) {
  const auto& p = cell.params;
  if (!(soc >= 0.0 && soc <= 1.0)) throw ConfigError("initial_soc", "initial SOC must lie in [0, 1]");
  const double x = p.stoich_n_min + soc * (p.stoich_n_max - p.stoich_n_min);
  const double y = p.stoich_p_max - soc * (p.stoich_p_max - p.stoich_p_min);
  CellState s;
  s.c_s_n.assign(cell.grid.radial_nodes, x * p.c_s_max_n);
  s.c_s_p.assign(cell.grid.radial_nodes, y * p.c_s_max_p);
  s.c_e.assign(3 * cell.grid.electrolyte_nodes_per_region, p.c_e_init);
  return s;
}

VoltageTerms voltage_terms(const CellState& state, double current, const Cell& cell) {
  const auto& p = cell.params;
  const double c_se_n = surface_concentration(state.c_s_n);
  const double c_se_p = surface_concentration(state.c_s_p);
  const double c_e_n = state.c_e.front();
  const double c_e_p = state.c_e.back();

  const double x = c_se_n / p.c_s_max_n;
  const double y = c_se_p / p.c_s_max_p;
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError(Electrode::anode, x);
  if (!(y >= 0.0 && y <= 1.0)) throw DomainError(Electrode::cathode, y);
  if (!(c_e_n > 0.0 && c_e_p > 0.0)) throw SingularityError("nonpositive electrolyte concentration at electrode boundary");
  if (!(x > 0.0 && x < 1.0)) throw SingularityError("anode surface concentration at a stoichiometry limit");
  if (!(y > 0.0 && y < 1.0)) throw SingularityError("cathode surface concentration at a stoichiometry limit");

  const double thermal = 2.0 * kGasConstant * p.temperature_K / kFaraday;

  // Interfacial current densities, A/m^2; positive for deintercalation.
  const double a_n = 3.0 * p.eps_s_n / p.radius_n;
  const double a_p = 3.0 * p.eps_s_p / p.radius_p;
  const double j_n = current / (a_n * p.area * p.thickness_n);
  const double j_p = -current / (a_p * p.area * p.thickness_p);
  const double i0_n = p.k_n * std::sqrt(c_e_n * c_se_n * (p.c_s_max_n - c_se_n));
  const double i0_p = p.k_p * std::sqrt(c_e_p * c_se_p * (p.c_s_max_p - c_se_p));

  const double kappa_eff = p.kappa_e * std::pow(p.eps_e, p.bruggeman);
  const double ohmic_e =
      current / p.area * (p.thickness_n / 2.0 + p.thickness_sep + p.thickness_p / 2.0) / kappa_eff;

  VoltageTerms t;
  t.ocv_n = cell.ocv.anode(x);
  t.ocv_p = cell.ocv.cathode(y);
  t.eta_n = thermal * std::asinh(j_n / (2.0 * i0_n));
  t.eta_p = thermal * std::asinh(j_p / (2.0 * i0_p));
  t.phi_e = -ohmic_e + thermal * (1.0 - p.transference) * std::log(c_e_p / c_e_n);
  t.ohmic = current * p.R_l;
  return t;
}

double terminal_voltage(const CellState& state, double current, const Cell& cell) {
  return voltage_terms(state, current, cell).total();
}

void SpmeIntegrator::Tridiagonal::factor(const std::vector<double>& a, const std::vector<double>& b,
                                         const std::vector<double>& c) {
  const std::size_t n = b.size();
  lower = a;
  upper_prime.assign(n, 0.0);
  inv_pivot.assign(n, 0.0);
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pivot = b[i] - (i > 0 ? a[i] * prev : 0.0);
    inv_pivot[i] = 1.0 / pivot;
    prev = c[i] * inv_pivot[i];
    upper_prime[i] = prev;
  }
}

void SpmeIntegrator::Tridiagonal::solve(std::vector<double>& rhs) const {
  const std::size_t n = rhs.size();
  rhs[0] *= inv_pivot[0];
  for (std::size_t i = 1; i < n; ++i) rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) * inv_pivot[i];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= upper_prime[i] * rhs[i + 1];
}

SpmeIntegrator::Particle SpmeIntegrator::make_particle(int nodes, double radius, double diffusivity) const {
  Particle part;
  const double dr = radius / (nodes - 1);
  part.volume.resize(nodes);
  std::vector<double> face(nodes - 1);
  double inner = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double outer = (i == nodes - 1) ? radius : (i + 0.5) * dr;
    part.volume[i] = (outer * outer * outer - inner * inner * inner) / 3.0;
    if (i < nodes - 1) face[i] = outer * outer;
    inner = outer;
  }
  part.surface_area = radius * radius;

  std::vector<double> a(nodes, 0.0), b(nodes, 0.0), c(nodes, 0.0);
  for (int i = 0; i < nodes; ++i) {
    b[i] = part.volume[i] / dt_;
    if (i > 0) {
      const double g = diffusivity * face[i - 1] / dr;
      a[i] = -g;
      b[i] += g;
    }
    if (i < nodes - 1) {
      const double g = diffusivity * face[i] / dr;
      c[i] = -g;
      b[i] += g;
    }
  }
  part.system.factor(a, b, c);
  return part;
}

SpmeIntegrator::SpmeIntegrator(const Cell& cell, double dt) : dt_(dt) {
  if (!(dt > 0.0)) throw ConfigError("dt", "time step must be positive");
  const auto& p = cell.params;
  if (cell.grid.radial_nodes < 2) throw ConfigError("discretization.radial_nodes", "need at least 2 radial nodes");
  if (cell.grid.electrolyte_nodes_per_region < 1)
    throw ConfigError("discretization.electrolyte_nodes_per_region", "need at least 1 node per region");

  anode_ = make_particle(cell.grid.radial_nodes, p.radius_n, p.D_s_n);
  cathode_ = make_particle(cell.grid.radial_nodes, p.radius_p, p.D_s_p);

  // Outward molar flux at the particle surface per ampere of discharge current.
  const double a_n = 3.0 * p.eps_s_n / p.radius_n;
  const double a_p = 3.0 * p.eps_s_p / p.radius_p;
  anode_flux_per_amp_ = 1.0 / (kFaraday * a_n * p.area * p.thickness_n);
  cathode_flux_per_amp_ = -1.0 / (kFaraday * a_p * p.area * p.thickness_p);

  const auto g = electrolyte_grid(cell);
  const std::size_t n = g.width.size();
  const double d_eff = p.D_e * std::pow(p.eps_e, p.bruggeman);
  electrolyte_capacity_.resize(n);
  electrolyte_source_.assign(n, 0.0);
  std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0);
  const double gain = (1.0 - p.transference) / (kFaraday * p.area);
  for (std::size_t i = 0; i < n; ++i) {
    electrolyte_capacity_[i] = p.eps_e * g.width[i] / dt;
    b[i] = electrolyte_capacity_[i];
    if (i > 0) {
      const double cond = d_eff / (0.5 * (g.width[i - 1] + g.width[i]));
      a[i] = -cond;
      b[i] += cond;
    }
    if (i + 1 < n) {
      const double cond = d_eff / (0.5 * (g.width[i] + g.width[i + 1]));
      c[i] = -cond;
      b[i] += cond;
    }
    const int region = static_cast<int>(i) / cell.grid.electrolyte_nodes_per_region;
    if (region == 0) electrolyte_source_[i] = gain * g.width[i] / p.thickness_n;
    if (region == 2) electrolyte_source_[i] = -gain * g.width[i] / p.thickness_p;
  }
  electrolyte_.factor(a, b, c);
}

void SpmeIntegrator::advance(CellState& state, double current) const {
  auto advance_particle = [&](const Particle& part, std::vector<double>& c, double flux) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= part.volume[i] / dt_;
    c.back() -= part.surface_area * flux;
    part.system.solve(c);
  };
  advance_particle(anode_, state.c_s_n, anode_flux_per_amp_ * current);
  advance_particle(cathode_, state.c_s_p, cathode_flux_per_amp_ * current);

  auto& ce = state.c_e;
  for (std::size_t i = 0; i < ce.size(); ++i) ce[i] = ce[i] * electrolyte_capacity_[i] + electrolyte_source_[i] * current;
  electrolyte_.solve(ce);
  state.time += dt_;
}

CellState step(const CellState& state, double current, double dt, const Cell& cell) {
  SpmeIntegrator integrator(cell, dt);
  CellState next = state;
  integrator.advance(next, current);
  auto finite = [](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  if (!finite(next.c_s_n) || !finite(next.c_s_p) || !finite(next.c_e))
    throw IntegrationError(0, "non-finite concentration");
  return next;
}

const char* to_string(Truncation t) {
  switch (t) {
    case Truncation::none: return "none";
    case Truncation::voltage_cutoff: return "voltage_cutoff";
    case Truncation::stoichiometry_limit: return "stoichiometry_limit";
    case Truncation::electrolyte_depletion: return "electrolyte_depletion";
  }
  return "?";
}

std::vector<double> Trajectory::voltage() const {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(r.voltage);
  return v;
}

Trajectory simulate(const CurrentProfile& profile, const Cell& cell, double initial_soc,
                    const SimulationOptions& options) {
  if (options.substeps < 1) throw ConfigError("substeps", "substeps must be >= 1");
  const auto& p = cell.params;
  SpmeIntegrator integrator(cell, profile.dt / options.substeps);
  CellState state = initial_state(cell, initial_soc);
  const auto weights = radial_weights(cell.grid.radial_nodes);

  Trajectory traj;
  traj.records.reserve(profile.size());
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const double current = profile.current[k];
    for (int s = 0; s < options.substeps; ++s) integrator.advance(state, current);
    state.time = profile.time(k);

    TrajectoryRecord r;
    r.time = state.time;
    r.current = current;
    r.c_se_n = surface_concentration(state.c_s_n);
    r.c_se_p = surface_concentration(state.c_s_p);
    r.c_bar_n = weighted_mean(weights, state.c_s_n);
    r.c_bar_p = weighted_mean(weights, state.c_s_p);
    r.c_e_n = state.c_e.front();
    r.c_e_p = state.c_e.back();
    if (!std::isfinite(r.c_se_n) || !std::isfinite(r.c_se_p) || !std::isfinite(r.c_bar_n) ||
        !std::isfinite(r.c_bar_p) || !std::isfinite(r.c_e_n) || !std::isfinite(r.c_e_p))
      throw IntegrationError(k, "non-finite concentration");

    const double x = r.c_se_n / p.c_s_max_n;
    const double y = r.c_se_p / p.c_s_max_p;
    if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0)) {
      traj.truncation = Truncation::stoichiometry_limit;
      break;
    }
    bool depleted = false;
    for (double c : state.c_e) depleted = depleted || !(c > 0.0);
    if (depleted) {
      traj.truncation = Truncation::electrolyte_depletion;
      break;
    }
    r.voltage = terminal_voltage(state, current, cell);
    if (!std::isfinite(r.voltage)) throw IntegrationError(k, "non-finite voltage");
    if (options.enforce_cutoff && (r.voltage < cell.cutoff.min_V || r.voltage > cell.cutoff.max_V)) {
      traj.truncation = Truncation::voltage_cutoff;
      break;
    }
    r.soc_surf = soc_from_anode(r.c_se_n, p);
    r.soc_bulk = soc_from_anode(r.c_bar_n, p);
    traj.records.push_back(r);
  }
  return traj;
}

std::array<double, kFeatureCount> features(const TrajectoryRecord& record) {
  return {record.current, record.soc_surf, record.soc_bulk, record.c_e_n};
}

}  // namespace spme

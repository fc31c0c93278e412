#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "spme/cell_parameters.hpp"
#include "spme/current_profile.hpp"

namespace spme {

/// Lithium concentrations of the SPMe. Solid profiles run from particle
/// centre (index 0) to surface (last index); the electrolyte profile runs
/// from the anode current collector to the cathode current collector.
struct CellState {
  std::vector<double> c_s_n;
  std::vector<double> c_s_p;
  std::vector<double> c_e;
  double time = 0.0;
};

/// Equilibrated state at the given SOC.
CellState initial_state(const Cell& cell, double soc);

/// Finite-volume control-volume weights of the radial grid (sum to one).
std::vector<double> radial_weights(int nodes);

double surface_concentration(const std::vector<double>& c_s);
double bulk_concentration(const std::vector<double>& c_s);
/// Electrolyte lithium per unit plate area, mol/m^2.
double electrolyte_inventory(const CellState& state, const Cell& cell);

double soc_surf(const CellState& state, const CellParameters& p);
double soc_bulk(const CellState& state, const CellParameters& p);

/// Individual contributions to the terminal voltage, V.
struct VoltageTerms {
  double ocv_p = 0.0;
  double ocv_n = 0.0;
  double phi_e = 0.0;  // phi_e,p - phi_e,n
  double eta_p = 0.0;
  double eta_n = 0.0;
  double ohmic = 0.0;  // I * R_l
  double total() const { return ocv_p - ocv_n + phi_e + eta_p - eta_n - ohmic; }
};

VoltageTerms voltage_terms(const CellState& state, double current, const Cell& cell);
double terminal_voltage(const CellState& state, double current, const Cell& cell);

/// Implicit-Euler propagator for one cell at a fixed step size. The
/// diffusion operators are linear with constant coefficients, so all three
/// tridiagonal systems are factored once here.
class SpmeIntegrator {
 public:
  SpmeIntegrator(const Cell& cell, double dt);

  void advance(CellState& state, double current) const;
  double dt() const { return dt_; }

 private:
  struct Tridiagonal {
    std::vector<double> lower;
    std::vector<double> upper_prime;
    std::vector<double> inv_pivot;
    void factor(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c);
    void solve(std::vector<double>& rhs) const;
  };

  struct Particle {
    std::vector<double> volume;  // per node, r^3/3 units
    double surface_area = 0.0;   // R^2
    Tridiagonal system;
  };

  Particle make_particle(int nodes, double radius, double diffusivity) const;

  double dt_;
  double anode_flux_per_amp_ = 0.0;    // outward surface flux, mol/m^2/s per A
  double cathode_flux_per_amp_ = 0.0;
  Particle anode_;
  Particle cathode_;
  std::vector<double> electrolyte_capacity_;  // eps_e * h / dt per cell
  std::vector<double> electrolyte_source_;    // per cell, mol/m^2/s per ampere
  Tridiagonal electrolyte_;
};

CellState step(const CellState& state, double current, double dt, const Cell& cell);

struct TrajectoryRecord {
  double time = 0.0;
  double current = 0.0;
  double voltage = 0.0;
  double soc_surf = 0.0;
  double soc_bulk = 0.0;
  double c_se_n = 0.0;
  double c_se_p = 0.0;
  double c_bar_n = 0.0;
  double c_bar_p = 0.0;
  double c_e_n = 0.0;
  double c_e_p = 0.0;
};

enum class Truncation { none, voltage_cutoff, stoichiometry_limit, electrolyte_depletion };

const char* to_string(Truncation t);

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  Truncation truncation = Truncation::none;

  bool truncated() const { return truncation != Truncation::none; }
  std::size_t size() const { return records.size(); }
  std::vector<double> voltage() const;
};

struct SimulationOptions {
  /// Integrator substeps per profile sample (>1 refines time resolution).
  int substeps = 1;
  /// When false the voltage window is ignored (used for truth generation sweeps).
  bool enforce_cutoff = true;
};

/// Runs the profile from an equilibrated start. Records follow profile
/// samples one to one; the trajectory stops early with a truncation flag if
/// the voltage leaves the cutoff window or a concentration leaves its
/// physical range.
Trajectory simulate(const CurrentProfile& profile, const Cell& cell, double initial_soc,
                    const SimulationOptions& options = {});

inline constexpr std::size_t kFeatureCount = 4;

/// [I, SOC_surf, SOC_bulk, c_e,n]
std::array<double, kFeatureCount> features(const TrajectoryRecord& record);

}  // namespace spme

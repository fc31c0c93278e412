#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "spme/ocv.hpp"

namespace spme {

inline constexpr double kFaraday = 96485.33212;     // C/mol
inline constexpr double kGasConstant = 8.314462618;  // J/(mol K)

/// Full SPMe parameterization. The first block holds the quantities the
/// estimator can target; everything below it is a fixed plant constant.
struct CellParameters {
  double eps_s_n = 0.0;  // anode active material volume fraction
  double eps_s_p = 0.0;  // cathode active material volume fraction
  double D_s_n = 0.0;    // m^2/s
  double D_s_p = 0.0;    // m^2/s
  double D_e = 0.0;      // m^2/s
  double eps_e = 0.0;    // electrolyte volume fraction, all three regions
  double R_l = 0.0;      // lumped Ohmic resistance, Ohm

  double radius_n = 0.0;       // m
  double radius_p = 0.0;       // m
  double thickness_n = 0.0;    // m
  double thickness_sep = 0.0;  // m
  double thickness_p = 0.0;    // m
  double area = 0.0;           // m^2
  double c_s_max_n = 0.0;      // mol/m^3
  double c_s_max_p = 0.0;      // mol/m^3
  double c_e_init = 0.0;       // mol/m^3
  double transference = 0.0;   // t+
  double k_n = 0.0;            // A/m^2 (m^3/mol)^1.5
  double k_p = 0.0;
  double kappa_e = 0.0;        // bulk electrolyte conductivity, S/m
  double bruggeman = 1.5;
  // Stoichiometry windows. The anode is fully lithiated (stoich_n_max) at
  // SOC 1; the cathode is at stoich_p_min at SOC 1.
  double stoich_n_min = 0.0;
  double stoich_n_max = 1.0;
  double stoich_p_min = 0.0;
  double stoich_p_max = 1.0;
  double capacity_nominal_Ah = 0.0;
  double temperature_K = 298.15;

  bool operator==(const CellParameters&) const = default;
};

/// Parameters the estimator may target.
enum class Target { eps_s_n, eps_s_p, D_s_n, D_s_p, D_e, eps_e };

inline constexpr std::array<Target, 6> kAllTargets = {Target::eps_s_n, Target::eps_s_p, Target::D_s_n,
                                                      Target::D_s_p,   Target::D_e,     Target::eps_e};

std::string_view target_name(Target t);
std::optional<Target> target_from_name(std::string_view name);
double get(const CellParameters& p, Target t);
void set(CellParameters& p, Target t, double value);
bool is_volume_fraction(Target t);
/// Diffusion coefficients are searched in log10 space.
bool is_log_scaled(Target t);

/// Throws ConfigError naming the first violated invariant.
void validate(const CellParameters& p);

/// Charge held by the anode stoichiometry window, A h. Bulk SOC integrates
/// current against this capacity.
double cell_capacity_Ah(const CellParameters& p);

struct Discretization {
  int radial_nodes = 10;
  int electrolyte_nodes_per_region = 10;
  bool operator==(const Discretization&) const = default;
};

struct VoltageWindow {
  double min_V = 2.5;
  double max_V = 4.3;
  bool operator==(const VoltageWindow&) const = default;
};

/// Everything needed to simulate one cell.
struct Cell {
  CellParameters params;
  OcvPair ocv;
  Discretization grid;
  VoltageWindow cutoff;
  bool operator==(const Cell&) const = default;
};

/// Shipped default plant: 5 A h graphite / layered-oxide cell.
CellParameters default_parameters();
Cell default_cell();

}  // namespace spme

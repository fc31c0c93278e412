#include "spme/cell_parameters.hpp"

#include <cmath>

#include "spme/errors.hpp"

namespace spme {

std::string_view target_name(Target t) {
  switch (t) {
    case Target::eps_s_n: return "eps_s_n";
    case Target::eps_s_p: return "eps_s_p";
    case Target::D_s_n: return "D_s_n";
    case Target::D_s_p: return "D_s_p";
    case Target::D_e: return "D_e";
    case Target::eps_e: return "eps_e";
  }
  return "?";
}

std::optional<Target> target_from_name(std::string_view name) {
  for (Target t : kAllTargets)
    if (target_name(t) == name) return t;
  return std::nullopt;
}

double get(const CellParameters& p, Target t) {
  switch (t) {
    case Target::eps_s_n: return p.eps_s_n;
    case Target::eps_s_p: return p.eps_s_p;
    case Target::D_s_n: return p.D_s_n;
    case Target::D_s_p: return p.D_s_p;
    case Target::D_e: return p.D_e;
    case Target::eps_e: return p.eps_e;
  }
  return 0.0;
}

void set(CellParameters& p, Target t, double value) {
  switch (t) {
    case Target::eps_s_n: p.eps_s_n = value; break;
    case Target::eps_s_p: p.eps_s_p = value; break;
    case Target::D_s_n: p.D_s_n = value; break;
    case Target::D_s_p: p.D_s_p = value; break;
    case Target::D_e: p.D_e = value; break;
    case Target::eps_e: p.eps_e = value; break;
  }
}

bool is_volume_fraction(Target t) {
  return t == Target::eps_s_n || t == Target::eps_s_p || t == Target::eps_e;
}

bool is_log_scaled(Target t) { return t == Target::D_s_n || t == Target::D_s_p || t == Target::D_e; }

namespace {

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw ConfigError(key, std::string("parameters.") + key + ": " + what);
}

void fraction(double v, const char* key) {
  require(std::isfinite(v) && v > 0.0 && v < 1.0, key, "must lie strictly inside (0, 1)");
}

void positive(double v, const char* key) {
  require(std::isfinite(v) && v > 0.0, key, "must be strictly positive");
}

}  // namespace

void validate(const CellParameters& p) {
  fraction(p.eps_s_n, "eps_s_n");
  fraction(p.eps_s_p, "eps_s_p");
  fraction(p.eps_e, "eps_e");
  positive(p.D_s_n, "D_s_n");
  positive(p.D_s_p, "D_s_p");
  positive(p.D_e, "D_e");
  require(std::isfinite(p.R_l) && p.R_l >= 0.0, "R_l", "must be nonnegative");
  positive(p.radius_n, "radius_n");
  positive(p.radius_p, "radius_p");
  positive(p.thickness_n, "thickness_n");
  positive(p.thickness_sep, "thickness_sep");
  positive(p.thickness_p, "thickness_p");
  positive(p.area, "area");
  positive(p.c_s_max_n, "c_s_max_n");
  positive(p.c_s_max_p, "c_s_max_p");
  positive(p.c_e_init, "c_e_init");
  fraction(p.transference, "transference");
  positive(p.k_n, "k_n");
  positive(p.k_p, "k_p");
  positive(p.kappa_e, "kappa_e");
  positive(p.capacity_nominal_Ah, "capacity_nominal_Ah");
  positive(p.temperature_K, "temperature_K");
  require(p.stoich_n_min >= 0.0 && p.stoich_n_min < p.stoich_n_max && p.stoich_n_max <= 1.0, "stoich_n_min",
          "anode window must satisfy 0 <= min < max <= 1");
  require(p.stoich_p_min >= 0.0 && p.stoich_p_min < p.stoich_p_max && p.stoich_p_max <= 1.0, "stoich_p_min",
          "cathode window must satisfy 0 <= min < max <= 1");
}

double cell_capacity_Ah(const CellParameters& p) {
  return kFaraday * p.eps_s_n * p.area * p.thickness_n * p.c_s_max_n * (p.stoich_n_max - p.stoich_n_min) / 3600.0;
}

CellParameters default_parameters() {
  CellParameters p;
  p.eps_s_n = 0.75;
  p.eps_s_p = 0.665;
  p.D_s_n = 1.0e-13;
  p.D_s_p = 4.0e-14;
  p.D_e = 6.0e-10;
  p.eps_e = 0.4;
  p.R_l = 0.005;

  p.radius_n = 5.86e-6;
  p.radius_p = 5.22e-6;
  p.thickness_n = 85.2e-6;
  p.thickness_sep = 12.0e-6;
  p.thickness_p = 75.6e-6;
  p.c_s_max_n = 33133.0;
  p.c_s_max_p = 63104.0;
  p.c_e_init = 1000.0;
  p.transference = 0.2594;
  p.k_n = 6.48e-7;
  p.k_p = 3.42e-6;
  p.kappa_e = 0.95;
  p.bruggeman = 1.5;
  p.stoich_n_min = 0.0279;
  p.stoich_n_max = 0.9014;
  p.stoich_p_min = 0.2661;
  p.stoich_p_max = 0.9084;
  p.capacity_nominal_Ah = 5.0;
  p.temperature_K = 298.15;
  // Plate area sized so the anode window holds exactly the nominal capacity.
  p.area = p.capacity_nominal_Ah * 3600.0 /
           (kFaraday * p.eps_s_n * p.thickness_n * p.c_s_max_n * (p.stoich_n_max - p.stoich_n_min));
  return p;
}

Cell default_cell() {
  Cell c;
  c.params = default_parameters();
  c.ocv = {default_anode_ocv(), default_cathode_ocv()};
  return c;
}

}  // namespace spme

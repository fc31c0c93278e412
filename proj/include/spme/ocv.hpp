#pragma once

#include <vector>

namespace spme {

/// Open-circuit potential fit U(s) over stoichiometry s in [0, 1]:
///
///   U(s) = constant + linear*s + sum_k a_k exp(b_k s) + sum_k a_k tanh(b_k (s - m_k))
///
/// The term lists are the coefficient sets written to the cell config file.
struct OcvCurve {
  struct ExpTerm {
    double a = 0.0;
    double b = 0.0;
    bool operator==(const ExpTerm&) const = default;
  };
  struct TanhTerm {
    double a = 0.0;
    double b = 0.0;
    double m = 0.0;
    bool operator==(const TanhTerm&) const = default;
  };

  double constant = 0.0;
  double linear = 0.0;
  std::vector<ExpTerm> exp_terms;
  std::vector<TanhTerm> tanh_terms;

  // Domain checks live in terminal_voltage, which knows the electrode.
  double operator()(double s) const;
  double derivative(double s) const;

  bool operator==(const OcvCurve&) const = default;
};

struct OcvPair {
  OcvCurve anode;
  OcvCurve cathode;
  bool operator==(const OcvPair&) const = default;
};

/// Graphite anode fit (decreasing in lithiation).
OcvCurve default_anode_ocv();
/// Layered-oxide cathode fit (decreasing in lithiation).
OcvCurve default_cathode_ocv();

}  // namespace spme

#include "spme/ocv.hpp"

#include <cmath>

namespace spme {

double OcvCurve::operator()(double s) const {
  double u = constant + linear * s;
  for (const auto& t : exp_terms) u += t.a * std::exp(t.b * s);
  for (const auto& t : tanh_terms) u += t.a * std::tanh(t.b * (s - t.m));
  return u;
}

double OcvCurve::derivative(double s) const {
  double du = linear;
  for (const auto& t : exp_terms) du += t.a * t.b * std::exp(t.b * s);
  for (const auto& t : tanh_terms) {
    const double c = std::cosh(t.b * (s - t.m));
    du += t.a * t.b / (c * c);
  }
  return du;
}

OcvCurve default_anode_ocv() {
  OcvCurve u;
  u.constant = 0.2482;
  u.exp_terms = {{1.9793, -39.3631}};
  u.tanh_terms = {{-0.0909, 29.8538, 0.1234}, {-0.04478, 14.9159, 0.2769}, {-0.0205, 30.4444, 0.6103}};
  return u;
}

OcvCurve default_cathode_ocv() {
  OcvCurve u;
  u.constant = 4.4875;
  u.linear = -0.8090;
  u.tanh_terms = {{-0.0428, 18.5138, 0.5542}, {-17.7326, 15.7890, 0.3117}, {17.5842, 15.9308, 0.3120}};
  return u;
}

}  // namespace spme

#include "peenform/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "peenform/error.hpp"

namespace peenform::basis {
namespace {

void check_degree(int n) {
  if (n < 0 || n > kMaxDegree)
    throw InputError("unsupported Legendre degree " + std::to_string(n) + " (supported: 0.." +
                     std::to_string(kMaxDegree) + ")");
}

void check_reference_point(double x) {
  if (!(std::abs(x) <= 1.0 + 1e-12))
    throw InputError("Legendre argument " + std::to_string(x) + " outside [-1, 1]");
}

// P_m and P'_m for arbitrary m; only used to locate Gauss nodes, so it is not
// bound by kMaxDegree.
std::pair<double, double> legendre_with_slope(int m, double x) {
  double p0 = 1.0;
  double p1 = x;
  if (m == 0) return {1.0, 0.0};
  for (int k = 1; k < m; ++k) {
    const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  // (1 - x^2) P'_m = m (P_{m-1} - x P_m); nodes are interior so 1 - x^2 > 0.
  return {p1, m * (p0 - x * p1) / (1.0 - x * x)};
}

}  // namespace

ShiftedInterval::ShiftedInterval(double length) : length_(length) {
  if (!(length > 0.0) || !std::isfinite(length))
    throw InputError("interval length must be positive, got " + std::to_string(length));
}

LegendreTable legendre_table(int max_degree, double x) {
  LegendreTable t;
  t.value.assign(max_degree + 1, 0.0);
  t.d1.assign(max_degree + 1, 0.0);
  t.d2.assign(max_degree + 1, 0.0);
  t.value[0] = 1.0;
  if (max_degree == 0) return t;
  t.value[1] = x;
  t.d1[1] = 1.0;
  for (int k = 1; k < max_degree; ++k) {
    t.value[k + 1] = ((2.0 * k + 1.0) * x * t.value[k] - k * t.value[k - 1]) / (k + 1.0);
    t.d1[k + 1] = t.d1[k - 1] + (2.0 * k + 1.0) * t.value[k];
    t.d2[k + 1] = t.d2[k - 1] + (2.0 * k + 1.0) * t.d1[k];
  }
  return t;
}

double eval_legendre(int n, double x) { return eval_legendre_deriv(n, x, 0); }

double eval_legendre_deriv(int n, double x, int order) {
  check_degree(n);
  check_reference_point(x);
  if (order < 0 || order > 2)
    throw InputError("unsupported derivative order " + std::to_string(order) + " (supported: 0..2)");
  const auto t = legendre_table(n, x);
  switch (order) {
    case 0: return t.value[n];
    case 1: return t.d1[n];
    default: return t.d2[n];
  }
}

double eval_shifted(int n, double x, double length, int order) {
  const ShiftedInterval interval(length);
  const double tol = 1e-12 * length;
  if (x < -tol || x > length + tol)
    throw InputError("point " + std::to_string(x) + " outside [0, " + std::to_string(length) + "]");
  double s = interval.to_reference(x);
  s = std::clamp(s, -1.0, 1.0);
  return std::pow(interval.jacobian(), order) * eval_legendre_deriv(n, s, order);
}

double orthogonality_delta(int n, int m, double length) {
  return n == m ? length / (2.0 * n + 1.0) : 0.0;
}

QuadratureRule gauss_rule(int m) {
  if (m < 1 || m > kMaxGaussPoints)
    throw InputError("Gauss rule point count " + std::to_string(m) + " outside 1.." +
                     std::to_string(kMaxGaussPoints));
  QuadratureRule rule;
  rule.nodes.assign(m, 0.0);
  rule.weights.assign(m, 0.0);
  const int half = (m + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess for the i-th largest root, then Newton.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double slope = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre_with_slope(m, x);
      const double dx = p / dp;
      x -= dx;
      slope = dp;
      if (std::abs(dx) < 1e-16) break;
    }
    slope = legendre_with_slope(m, x).second;
    const double w = 2.0 / ((1.0 - x * x) * slope * slope);
    rule.nodes[i] = -x;
    rule.nodes[m - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[m - 1 - i] = w;
  }
  if (m % 2 == 1) rule.nodes[m / 2] = 0.0;
  return rule;
}

int points_for_degree(int degree) {
  if (degree < 0) degree = 0;
  return (degree + 2) / 2 + 1;
}

}  // namespace peenform::basis

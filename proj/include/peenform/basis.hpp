#pragma once

#include <vector>

namespace peenform::basis {

/// Highest Legendre degree the tensor basis may use.
inline constexpr int kMaxDegree = 12;
/// Largest Gauss rule gauss_rule() will build.
inline constexpr int kMaxGaussPoints = 64;

struct QuadratureRule {
  std::vector<double> nodes;    // ascending, in [-1, 1]
  std::vector<double> weights;  // positive, sum to 2

  int point_count() const { return static_cast<int>(nodes.size()); }
};

/// A physical interval [0, length] that Legendre polynomials are mapped onto.
class ShiftedInterval {
 public:
  explicit ShiftedInterval(double length);

  double length() const { return length_; }
  /// Maps x in [0, L] to (x - L/2) / (L/2).
  double to_reference(double x) const { return (x - 0.5 * length_) / (0.5 * length_); }
  /// d(reference)/dx = 2/L.
  double jacobian() const { return 2.0 / length_; }

 private:
  double length_;
};

double eval_legendre(int n, double x);

/// k-th derivative (k = 0, 1, 2) of P_n at x, by the derivative recurrences
/// P'_{k+1} = P'_{k-1} + (2k+1) P_k and P''_{k+1} = P''_{k-1} + (2k+1) P'_k.
double eval_legendre_deriv(int n, double x, int order);

/// (2/L)^order * P_n^(order)((x - L/2) / (L/2)) for x in [0, L].
double eval_shifted(int n, double x, double length, int order);

/// Values P_0..P_max_degree (and derivatives) at one reference point; the
/// tensor evaluators use this to avoid re-running the recurrence per index.
struct LegendreTable {
  std::vector<double> value;
  std::vector<double> d1;
  std::vector<double> d2;
};
LegendreTable legendre_table(int max_degree, double x);

/// L/(2n+1) when n == m, else 0.
double orthogonality_delta(int n, int m, double length);

QuadratureRule gauss_rule(int m);

/// Point count used for a polynomial integrand of total 1-D degree d:
/// ceil((d+1)/2) + 1.
int points_for_degree(int degree);

}  // namespace peenform::basis

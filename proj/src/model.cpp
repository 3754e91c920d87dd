#include "peenform/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "peenform/error.hpp"

namespace peenform {

TensorBasis::TensorBasis(int n, PlateSpec plate) : n_(n), plate_(plate) {
  if (n < 2 || n > basis::kMaxDegree + 1)
    throw InputError("basis size N must lie in [2, " + std::to_string(basis::kMaxDegree + 1) +
                     "], got " + std::to_string(n));
  plate_.validate();
}

void TensorBasis::check_point(const Point& p) const {
  const double t1 = 1e-12 * plate_.L1;
  const double t2 = 1e-12 * plate_.L2;
  if (p.x1 < -t1 || p.x1 > plate_.L1 + t1 || p.x2 < -t2 || p.x2 > plate_.L2 + t2)
    throw InputError("point (" + std::to_string(p.x1) + ", " + std::to_string(p.x2) +
                     ") lies outside the plate");
}

void IntensityMap::validate() const {
  if (!(base_intensity >= 0.0) || !std::isfinite(base_intensity))
    throw InputError("base intensity must be non-negative and finite");
  if (sign != 1 && sign != -1) throw InputError("intensity sign must be +1 or -1");
  for (std::size_t i = 0; i < masked_regions.size(); ++i) {
    const auto& r = masked_regions[i];
    if (!(r.x1_max >= r.x1_min) || !(r.x2_max >= r.x2_min))
      throw InputError("mask " + std::to_string(i) + " has inverted bounds");
  }
}

double IntensityMap::intensity_at(const Point& p) const {
  for (const auto& r : masked_regions)
    if (!r.empty() && r.contains(p)) return 0.0;
  return base_intensity;
}

IntensityMap IntensityMap::clipped(const PlateSpec& plate) const {
  IntensityMap out = *this;
  out.masked_regions.clear();
  for (auto r : masked_regions) {
    r.x1_min = std::clamp(r.x1_min, 0.0, plate.L1);
    r.x1_max = std::clamp(r.x1_max, 0.0, plate.L1);
    r.x2_min = std::clamp(r.x2_min, 0.0, plate.L2);
    r.x2_max = std::clamp(r.x2_max, 0.0, plate.L2);
    if (!r.empty()) out.masked_regions.push_back(r);
  }
  return out;
}

IntensityMap IntensityMap::with_mask_offset(double offset) const {
  IntensityMap out = *this;
  for (auto& r : out.masked_regions) {
    r.x1_min -= offset;
    r.x1_max += offset;
    r.x2_min -= offset;
    r.x2_max += offset;
  }
  return out;
}

namespace model {
namespace {

struct AxisTables {
  basis::LegendreTable s1;
  basis::LegendreTable s2;
};

const std::vector<double>& pick(const basis::LegendreTable& t, int order) {
  return order == 0 ? t.value : order == 1 ? t.d1 : t.d2;
}

void check_orders(int d1, int d2) {
  if (d1 < 0 || d2 < 0 || d1 > 2 || d2 > 2 || d1 + d2 > 2)
    throw InputError("derivative orders (" + std::to_string(d1) + ", " + std::to_string(d2) +
                     ") unsupported; need d1, d2 >= 0 and d1 + d2 <= 2");
}

AxisTables tables_at(const TensorBasis& basis, const Point& x) {
  basis.check_point(x);
  const auto& plate = basis.plate();
  const double s1 = std::clamp((x.x1 - 0.5 * plate.L1) / (0.5 * plate.L1), -1.0, 1.0);
  const double s2 = std::clamp((x.x2 - 0.5 * plate.L2) / (0.5 * plate.L2), -1.0, 1.0);
  return {basis::legendre_table(basis.n() - 1, s1), basis::legendre_table(basis.n() - 1, s2)};
}

// Integrals of P_0..P_{count-1}((x - L/2)/(L/2)) over [a, b] in physical units.
std::vector<double> interval_moments(int count, double length, double a, double b) {
  std::vector<double> out(count, 0.0);
  if (!(b > a)) return out;
  const auto rule = basis::gauss_rule(basis::points_for_degree(count - 1));
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int q = 0; q < rule.point_count(); ++q) {
    const double x = mid + half * rule.nodes[q];
    const double s = std::clamp((x - 0.5 * length) / (0.5 * length), -1.0, 1.0);
    const auto t = basis::legendre_table(count - 1, s);
    for (int k = 0; k < count; ++k) out[k] += rule.weights[q] * half * t.value[k];
  }
  return out;
}

std::vector<double> breakpoints(double length, const std::vector<Rect>& masks, bool first_axis) {
  std::vector<double> pts{0.0, length};
  for (const auto& r : masks) {
    pts.push_back(first_axis ? r.x1_min : r.x2_min);
    pts.push_back(first_axis ? r.x1_max : r.x2_max);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

MomentField normalize(const TensorBasis& basis, const Eigen::MatrixXd& numerator) {
  const int n = basis.n();
  const auto& plate = basis.plate();
  MomentField field{Eigen::VectorXd::Zero(basis.size())};
  for (int i1 = 0; i1 < n; ++i1)
    for (int i2 = 0; i2 < n; ++i2)
      field.t[basis.index(i1, i2)] =
          numerator(i1, i2) / (basis::orthogonality_delta(i1, i1, plate.L1) *
                               basis::orthogonality_delta(i2, i2, plate.L2));
  return field;
}

}  // namespace

double basis_function(const TensorBasis& basis, int n, const Point& x, int d1, int d2) {
  if (n < 0 || n >= basis.size())
    throw InputError("basis index " + std::to_string(n) + " outside [0, " +
                     std::to_string(basis.size()) + ")");
  check_orders(d1, d2);
  const auto t = tables_at(basis, x);
  const auto& plate = basis.plate();
  return std::pow(2.0 / plate.L1, d1) * std::pow(2.0 / plate.L2, d2) *
         pick(t.s1, d1)[basis.x1_degree(n)] * pick(t.s2, d2)[basis.x2_degree(n)];
}

Eigen::RowVectorXd basis_row(const TensorBasis& basis, const Point& x, int d1, int d2) {
  check_orders(d1, d2);
  const auto t = tables_at(basis, x);
  const auto& plate = basis.plate();
  const double scale = std::pow(2.0 / plate.L1, d1) * std::pow(2.0 / plate.L2, d2);
  const auto& f1 = pick(t.s1, d1);
  const auto& f2 = pick(t.s2, d2);
  Eigen::RowVectorXd row(basis.size());
  for (int i1 = 0; i1 < basis.n(); ++i1)
    for (int i2 = 0; i2 < basis.n(); ++i2) row[basis.index(i1, i2)] = scale * f1[i1] * f2[i2];
  return row;
}

MomentField project_moment(const TensorBasis& basis, const IntensityMap& map,
                           const CalibrationModel& cal) {
  map.validate();
  const auto& plate = basis.plate();
  const IntensityMap clipped = map.clipped(plate);
  const double tau = calibration::intensity_to_moment(map.base_intensity, cal, map.sign);
  const int n = basis.n();
  Eigen::MatrixXd numerator = Eigen::MatrixXd::Zero(n, n);
  if (tau == 0.0) return normalize(basis, numerator);

  const auto cuts1 = breakpoints(plate.L1, clipped.masked_regions, true);
  const auto cuts2 = breakpoints(plate.L2, clipped.masked_regions, false);
  std::vector<Eigen::VectorXd> mom2;
  for (std::size_t j = 0; j + 1 < cuts2.size(); ++j) {
    const auto m = interval_moments(n, plate.L2, cuts2[j], cuts2[j + 1]);
    mom2.emplace_back(Eigen::Map<const Eigen::VectorXd>(m.data(), n));
  }
  for (std::size_t i = 0; i + 1 < cuts1.size(); ++i) {
    const auto m1 = interval_moments(n, plate.L1, cuts1[i], cuts1[i + 1]);
    const Eigen::Map<const Eigen::VectorXd> col(m1.data(), n);
    const double c1 = 0.5 * (cuts1[i] + cuts1[i + 1]);
    for (std::size_t j = 0; j + 1 < cuts2.size(); ++j) {
      const Point center{c1, 0.5 * (cuts2[j] + cuts2[j + 1])};
      if (clipped.intensity_at(center) == 0.0) continue;
      numerator += tau * col * mom2[j].transpose();
    }
  }
  return normalize(basis, numerator);
}

MomentField project_moment(const TensorBasis& basis,
                           const std::function<double(const Point&)>& tau) {
  constexpr int kCells = 16;
  const auto& plate = basis.plate();
  const int n = basis.n();
  const auto rule = basis::gauss_rule(n + 2);
  const double w1 = plate.L1 / kCells;
  const double w2 = plate.L2 / kCells;
  Eigen::MatrixXd numerator = Eigen::MatrixXd::Zero(n, n);
  for (int c1 = 0; c1 < kCells; ++c1)
    for (int c2 = 0; c2 < kCells; ++c2)
      for (int q1 = 0; q1 < rule.point_count(); ++q1) {
        const double x1 = w1 * (c1 + 0.5 * (1.0 + rule.nodes[q1]));
        const auto t1 = basis::legendre_table(n - 1, 2.0 * x1 / plate.L1 - 1.0);
        for (int q2 = 0; q2 < rule.point_count(); ++q2) {
          const double x2 = w2 * (c2 + 0.5 * (1.0 + rule.nodes[q2]));
          const auto t2 = basis::legendre_table(n - 1, 2.0 * x2 / plate.L2 - 1.0);
          const double w = 0.25 * w1 * w2 * rule.weights[q1] * rule.weights[q2] * tau({x1, x2});
          for (int i1 = 0; i1 < n; ++i1)
            for (int i2 = 0; i2 < n; ++i2) numerator(i1, i2) += w * t1.value[i1] * t2.value[i2];
        }
      }
  return normalize(basis, numerator);
}

double eval_displacement(const TensorBasis& basis, const DisplacementField& u, const Point& x) {
  return basis_row(basis, x).dot(u.a);
}

double eval_moment(const TensorBasis& basis, const MomentField& tau, const Point& x) {
  return basis_row(basis, x).dot(tau.t);
}

MomentResultants moment_resultants(const TensorBasis& basis, const DisplacementField& u,
                                   const MomentField& tau, const Point& x) {
  const auto& plate = basis.plate();
  const double u11 = basis_row(basis, x, 2, 0).dot(u.a);
  const double u22 = basis_row(basis, x, 0, 2).dot(u.a);
  const double u12 = basis_row(basis, x, 1, 1).dot(u.a);
  const double t = eval_moment(basis, tau, x);
  const double d1 = plate.D1();
  const double d2 = plate.D2();
  return {d1 * (u22 + plate.v * u11) + d2 * t, -d1 * (u11 + plate.v * u22) - d2 * t,
          d1 * (1.0 - plate.v) * u12};
}

DisplacementField analytic_uniform_solution(const TensorBasis& basis, double tau) {
  if (basis.n() < 3)
    throw InputError("the uniform-moment paraboloid needs N >= 3, basis has N = " +
                     std::to_string(basis.n()));
  const auto& p = basis.plate();
  const double scale = tau / (p.h * p.h * p.h);
  // (x - L/2)^2 = (L/2)^2 s^2 and s^2 = (2 P2(s) + 1) / 3.
  DisplacementField u{Eigen::VectorXd::Zero(basis.size())};
  u.a[basis.index(0, 0)] = scale * (p.L1 * p.L1 + p.L2 * p.L2);
  u.a[basis.index(2, 0)] = -scale * p.L1 * p.L1;
  u.a[basis.index(0, 2)] = -scale * p.L2 * p.L2;
  return u;
}

}  // namespace model
}  // namespace peenform

#include "peenform/assembly.hpp"

#include <cmath>
#include <string>

#include "peenform/error.hpp"

namespace peenform {
namespace {

constexpr double kSingularRcond = 1e-15;

const std::vector<double>& pick(const basis::LegendreTable& t, int order) {
  return order == 0 ? t.value : order == 1 ? t.d1 : t.d2;
}

}  // namespace

AxisIntegrals::AxisIntegrals(int n, double length) {
  const basis::ShiftedInterval interval(length);
  // One rule exact for the highest-degree product P_{n-1} P_{n-1}.
  const auto rule = basis::gauss_rule(basis::points_for_degree(2 * (n - 1)));
  std::vector<basis::LegendreTable> at_nodes;
  at_nodes.reserve(rule.nodes.size());
  for (double s : rule.nodes) at_nodes.push_back(basis::legendre_table(n - 1, s));

  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
      const double chain = std::pow(interval.jacobian(), a + b) * 0.5 * length;
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
          if (a == 0 && b == 0) {
            m(p, q) = basis::orthogonality_delta(p, q, length);
            continue;
          }
          // Derivatives lower the degree; a vanishing factor is exactly zero.
          if (p < a || q < b) continue;
          // odd integrand on the symmetric reference interval
          if (((p - a) + (q - b)) % 2 != 0) continue;
          double sum = 0.0;
          for (int k = 0; k < rule.point_count(); ++k)
            sum += rule.weights[k] * pick(at_nodes[k], a)[p] * pick(at_nodes[k], b)[q];
          m(p, q) = chain * sum;
        }
      table_[a * 3 + b] = std::move(m);
    }
}

FactorIntegrals::FactorIntegrals(const TensorBasis& basis)
    : x1(basis.n(), basis.plate().L1), x2(basis.n(), basis.plate().L2) {}

namespace assembly {

StiffnessMatrix assemble_stiffness(const TensorBasis& basis, const FactorIntegrals& f) {
  const int size = basis.size();
  const auto& plate = basis.plate();
  const double v = plate.v;
  Eigen::MatrixXd kp(size, size);
  for (int i = 0; i < size; ++i) {
    const int i1 = basis.x1_degree(i);
    const int i2 = basis.x2_degree(i);
    for (int j = 0; j < size; ++j) {
      const int j1 = basis.x1_degree(j);
      const int j2 = basis.x2_degree(j);
      kp(i, j) = f.x1(2, 2, i1, j1) * f.x2(0, 0, i2, j2) + f.x1(0, 0, i1, j1) * f.x2(2, 2, i2, j2) +
                 2.0 * (1.0 - v) * f.x1(1, 1, i1, j1) * f.x2(1, 1, i2, j2) +
                 2.0 * v * f.x1(2, 0, i1, j1) * f.x2(0, 2, i2, j2);
    }
  }
  return {plate.D1() * 0.5 * (kp + kp.transpose())};
}

StiffnessMatrix assemble_stiffness(const TensorBasis& basis) {
  return assemble_stiffness(basis, FactorIntegrals(basis));
}

MomentMap assemble_moment_map(const TensorBasis& basis, const FactorIntegrals& f) {
  const int size = basis.size();
  Eigen::MatrixXd t(size, size);
  for (int j = 0; j < size; ++j) {
    const int j1 = basis.x1_degree(j);
    const int j2 = basis.x2_degree(j);
    for (int i = 0; i < size; ++i) {
      const int i1 = basis.x1_degree(i);
      const int i2 = basis.x2_degree(i);
      t(j, i) = f.x1(0, 2, j1, i1) * f.x2(0, 0, j2, i2) + f.x1(0, 0, j1, i1) * f.x2(0, 2, j2, i2);
    }
  }
  return {basis.plate().D2() * t};
}

MomentMap assemble_moment_map(const TensorBasis& basis) {
  return assemble_moment_map(basis, FactorIntegrals(basis));
}

ConstraintMatrix assemble_constraints(const TensorBasis& basis) {
  const int size = basis.size();
  Eigen::MatrixXd g(size, 3);
  for (int k = 0; k < size; ++k) {
    const double s1 = basis.x1_degree(k) % 2 == 0 ? 1.0 : -1.0;
    const double s2 = basis.x2_degree(k) % 2 == 0 ? 1.0 : -1.0;
    g(k, 0) = s1 * s2;
    g(k, 1) = s2;
    g(k, 2) = s1;
  }
  return {g};
}

SaddleSolution forward_solve(const TensorBasis& basis, const MomentField& tau) {
  return PlateSystem(basis).solve(tau);
}

}  // namespace assembly

PlateSystem::PlateSystem(const TensorBasis& basis) : basis_(basis) {
  const FactorIntegrals f(basis_);
  stiffness_ = assembly::assemble_stiffness(basis_, f);
  moment_map_ = assembly::assemble_moment_map(basis_, f);
  constraints_ = assembly::assemble_constraints(basis_);
  const int size = basis_.size();
  saddle_ = Eigen::MatrixXd::Zero(size + 3, size + 3);
  saddle_.topLeftCorner(size, size) = stiffness_.K;
  saddle_.topRightCorner(size, 3) = constraints_.G;
  saddle_.bottomLeftCorner(3, size) = constraints_.G.transpose();
  lu_.compute(saddle_);
  const double rcond = lu_.rcond();
  if (!(rcond > kSingularRcond))
    throw NumericalError("plate saddle system is singular (condition estimate " +
                         std::to_string(1.0 / rcond) + ")");
}

SaddleSolution PlateSystem::solve(const MomentField& tau) const {
  const int size = basis_.size();
  if (tau.t.size() != size)
    throw InputError("moment field has " + std::to_string(tau.t.size()) +
                     " coefficients, basis needs " + std::to_string(size));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size + 3);
  rhs.head(size) = -moment_map_.T.transpose() * tau.t;
  const Eigen::VectorXd x = lu_.solve(rhs);
  SaddleSolution out;
  out.a.a = x.head(size);
  out.lambda = x.tail<3>();
  return out;
}

Eigen::MatrixXd PlateSystem::displacement_response() const {
  const int size = basis_.size();
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(size + 3, size);
  gamma.topRows(size) = -moment_map_.T.transpose();
  return lu_.solve(gamma).topRows(size);
}

double PlateSystem::condition_estimate() const { return 1.0 / lu_.rcond(); }

}  // namespace peenform

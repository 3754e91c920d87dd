#include "peenform/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "peenform/error.hpp"

namespace peenform::inverse {
namespace {

constexpr double kRankTolerance = 1e-10;
constexpr double kConsistencyTolerance = 1e-8;

std::vector<double> linspace(double length, int count) {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = length * i / (count - 1);
  out.back() = length;
  return out;
}

}  // namespace

RegularizationMatrix assemble_regularization(const TensorBasis& basis, const FactorIntegrals& f) {
  const int size = basis.size();
  const auto& plate = basis.plate();
  const double first = plate.L1 * plate.L2;
  const double second = first * first;
  Eigen::MatrixXd h(size, size);
  for (int i = 0; i < size; ++i) {
    const int i1 = basis.x1_degree(i);
    const int i2 = basis.x2_degree(i);
    for (int j = 0; j < size; ++j) {
      const int j1 = basis.x1_degree(j);
      const int j2 = basis.x2_degree(j);
      const double mass = f.x1(0, 0, i1, j1) * f.x2(0, 0, i2, j2);
      const double grad = f.x1(1, 1, i1, j1) * f.x2(0, 0, i2, j2) + f.x1(0, 0, i1, j1) * f.x2(1, 1, i2, j2);
      const double hess = f.x1(2, 2, i1, j1) * f.x2(0, 0, i2, j2) +
                          f.x1(0, 0, i1, j1) * f.x2(2, 2, i2, j2) +
                          2.0 * f.x1(1, 1, i1, j1) * f.x2(1, 1, i2, j2);
      h(i, j) = mass + first * grad + second * hess;
    }
  }
  return {0.5 * (h + h.transpose())};
}

RegularizationMatrix assemble_regularization(const TensorBasis& basis) {
  return assemble_regularization(basis, FactorIntegrals(basis));
}

void validate_constraints(const TensorBasis& basis, const std::vector<DisplacementConstraint>& c) {
  if (c.empty()) throw InputError("inverse problem needs at least one displacement constraint");
  if (static_cast<int>(c.size()) > basis.size())
    throw InputError("over-constrained: " + std::to_string(c.size()) +
                     " displacement constraints exceed the " + std::to_string(basis.size()) +
                     " moment degrees of freedom");
  const auto& plate = basis.plate();
  const double min_gap = 1e-9 * std::min(plate.L1, plate.L2);
  for (std::size_t i = 0; i < c.size(); ++i) {
    basis.check_point(c[i].point);
    if (!std::isfinite(c[i].value))
      throw InputError("constraint " + std::to_string(i) + " has a non-finite target");
    for (std::size_t j = 0; j < i; ++j) {
      const double d = std::hypot(c[i].point.x1 - c[j].point.x1, c[i].point.x2 - c[j].point.x2);
      if (d < min_gap)
        throw InputError("duplicate constraint points: rows " + std::to_string(j) + " and " +
                         std::to_string(i));
    }
  }
}

ResponseMap assemble_response_map(const PlateSystem& system,
                                  const std::vector<DisplacementConstraint>& constraints) {
  const auto& basis = system.basis();
  validate_constraints(basis, constraints);
  Eigen::MatrixXd q(constraints.size(), basis.size());
  for (std::size_t i = 0; i < constraints.size(); ++i)
    q.row(i) = model::basis_row(basis, constraints[i].point);
  const Eigen::MatrixXd& response = system.displacement_response();
  return {q * response, response.norm()};
}

ResponseMap assemble_response_map(const TensorBasis& basis,
                                  const std::vector<DisplacementConstraint>& constraints) {
  validate_constraints(basis, constraints);
  return assemble_response_map(PlateSystem(basis), constraints);
}

MomentField solve_inverse(const RegularizationMatrix& H, const ResponseMap& A,
                          const std::vector<DisplacementConstraint>& constraints) {
  const auto p = A.A.rows();
  const auto size = A.A.cols();
  if (static_cast<std::size_t>(p) != constraints.size())
    throw InputError("response map has " + std::to_string(p) + " rows for " +
                     std::to_string(constraints.size()) + " constraints");
  if (H.H.rows() != size || H.H.cols() != size)
    throw InputError("regularization matrix size does not match the response map");
  if (p > size) throw InputError("over-constrained inverse problem");

  // Rows are screened one at a time against the rows kept so far. A row that
  // is a combination of earlier rows is dropped when its target agrees with
  // the same combination of earlier targets (the fourth free corner is such a
  // row: its displacement vanishes for every moment field); otherwise the
  // constraint set has no solution and the row is named.
  double row_scale = 0.0;
  double target_scale = 0.0;
  for (Eigen::Index k = 0; k < p; ++k) {
    row_scale = std::max(row_scale, A.A.row(k).norm());
    target_scale = std::max(target_scale, std::abs(constraints[k].value));
  }
  row_scale = std::max(row_scale, A.scale);
  if (!(std::sqrt(A.A.squaredNorm()) > kRankTolerance * row_scale))
    throw InputError("degenerate displacement constraints: no constraint responds to any moment field");
  std::vector<Eigen::Index> kept;
  for (Eigen::Index k = 0; k < p; ++k) {
    Eigen::MatrixXd basis_rows(size, static_cast<Eigen::Index>(kept.size()) + 1);
    for (std::size_t r = 0; r < kept.size(); ++r) basis_rows.col(r) = A.A.row(kept[r]).transpose();
    basis_rows.col(kept.size()) = A.A.row(k).transpose();
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis_rows);
    const double last_pivot = std::abs(qr.matrixQR()(kept.size(), kept.size()));
    if (last_pivot > kRankTolerance * row_scale) {
      kept.push_back(k);
      continue;
    }
    double implied = 0.0;
    if (!kept.empty()) {
      const Eigen::MatrixXd earlier = basis_rows.leftCols(kept.size());
      const Eigen::VectorXd coeffs = earlier.colPivHouseholderQr().solve(A.A.row(k).transpose());
      for (std::size_t r = 0; r < kept.size(); ++r) implied += coeffs[r] * constraints[kept[r]].value;
    }
    if (std::abs(implied - constraints[k].value) > kConsistencyTolerance * std::max(target_scale, 1e-300))
      throw InputError("degenerate displacement constraints: row " + std::to_string(k) +
                       " is linearly dependent on earlier rows (e.g. a constrained corner) and "
                       "asks for an incompatible displacement");
    warn("displacement constraint " + std::to_string(k) +
         " is implied by the other constraints and is satisfied automatically; dropped");
  }

  const auto kept_count = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd a(kept_count, size);
  Eigen::VectorXd u(kept_count);
  for (Eigen::Index r = 0; r < kept_count; ++r) {
    a.row(r) = A.A.row(kept[r]);
    u[r] = constraints[kept[r]].value;
  }

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(size + kept_count, size + kept_count);
  kkt.topLeftCorner(size, size) = H.H;
  kkt.topRightCorner(size, kept_count) = a.transpose();
  kkt.bottomLeftCorner(kept_count, size) = a;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size + kept_count);
  rhs.tail(kept_count) = u;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
  const Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) throw NumericalError("inverse KKT solve produced non-finite values");
  return {x.head(size)};
}

IntensitySamples recover_intensity(const TensorBasis& basis, const MomentField& t,
                                   const CalibrationModel& model, const Grid& grid) {
  if (!(model.slope_K > 0.0)) throw InputError("calibration slope must be positive");
  if (grid.n1 < 2 || grid.n2 < 2) throw InputError("sample grid must be at least 2x2");
  IntensitySamples out;
  out.x1 = linspace(basis.plate().L1, grid.n1);
  out.x2 = linspace(basis.plate().L2, grid.n2);
  out.values.resize(grid.n1, grid.n2);
  for (int i = 0; i < grid.n1; ++i)
    for (int j = 0; j < grid.n2; ++j) {
      const double v = model::eval_moment(basis, t, {out.x1[i], out.x2[j]}) / model.slope_K;
      out.values(i, j) = v;
      if (v < 0.0) out.face_flip = true;
    }
  return out;
}

InteriorStats interior_stats(const IntensitySamples& samples, const PlateSpec& plate) {
  InteriorStats s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < samples.x1.size(); ++i) {
    if (samples.x1[i] < 0.1 * plate.L1 || samples.x1[i] > 0.9 * plate.L1) continue;
    for (std::size_t j = 0; j < samples.x2.size(); ++j) {
      if (samples.x2[j] < 0.1 * plate.L2 || samples.x2[j] > 0.9 * plate.L2) continue;
      const double v = samples.values(i, j);
      sum += v;
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
      ++count;
    }
  }
  if (count == 0) throw InputError("sample grid has no interior points");
  s.mean = sum / count;
  s.relative_spread = s.mean != 0.0 ? (s.max - s.min) / std::abs(s.mean) : 0.0;
  return s;
}

}  // namespace peenform::inverse

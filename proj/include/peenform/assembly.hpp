#pragma once

#include <Eigen/Dense>
#include <array>

#include "peenform/model.hpp"

namespace peenform {

/// 1-D factor integrals of one axis,
///   X[a][b](p, q) = int_0^L d^a P_p(s(x)) d^b P_q(s(x)) dx
/// with chain-rule factors included. Entries with a = b = 0 come from the
/// orthogonality relation; the rest use a Gauss rule sized to the integrand
/// degree.
class AxisIntegrals {
 public:
  AxisIntegrals(int n, double length);

  double operator()(int a, int b, int p, int q) const { return table_[a * 3 + b](p, q); }
  const Eigen::MatrixXd& table(int a, int b) const { return table_[a * 3 + b]; }

 private:
  std::array<Eigen::MatrixXd, 9> table_;
};

/// Factor tables for both axes of a basis.
struct FactorIntegrals {
  explicit FactorIntegrals(const TensorBasis& basis);
  AxisIntegrals x1;
  AxisIntegrals x2;
};

struct StiffnessMatrix {
  Eigen::MatrixXd K;
};

/// T(j, i) = D2 [ int Phi_j Phi_i,11 + int Phi_j Phi_i,22 ]; the load on the
/// displacement coefficients is F = T^T t.
struct MomentMap {
  Eigen::MatrixXd T;
};

/// Columns g1, g2, g3: basis values at the corners (0,0), (L1,0), (0,L2).
struct ConstraintMatrix {
  Eigen::MatrixXd G;
};

struct SaddleSolution {
  DisplacementField a;
  Eigen::Vector3d lambda = Eigen::Vector3d::Zero();
};

namespace assembly {

StiffnessMatrix assemble_stiffness(const TensorBasis& basis, const FactorIntegrals& f);
StiffnessMatrix assemble_stiffness(const TensorBasis& basis);
MomentMap assemble_moment_map(const TensorBasis& basis, const FactorIntegrals& f);
MomentMap assemble_moment_map(const TensorBasis& basis);
ConstraintMatrix assemble_constraints(const TensorBasis& basis);

}  // namespace assembly

/// Fully-free plate: assembled K, T, G and one LU factorization of
///   [K  G]
///   [G' 0]
/// reused for every right-hand side. The load is -F = -T^T t, which makes a
/// uniform positive moment lift the plate center.
class PlateSystem {
 public:
  explicit PlateSystem(const TensorBasis& basis);

  const TensorBasis& basis() const { return basis_; }
  const StiffnessMatrix& stiffness() const { return stiffness_; }
  const MomentMap& moment_map() const { return moment_map_; }
  const ConstraintMatrix& constraints() const { return constraints_; }
  const Eigen::MatrixXd& saddle_matrix() const { return saddle_; }

  SaddleSolution solve(const MomentField& tau) const;

  /// Displacement coefficients per unit moment coefficient: column k is the
  /// solved `a` for t = e_k (the truncated kappa * Gamma).
  Eigen::MatrixXd displacement_response() const;

  /// 1-norm condition estimate of the saddle matrix.
  double condition_estimate() const;

 private:
  TensorBasis basis_;
  StiffnessMatrix stiffness_;
  MomentMap moment_map_;
  ConstraintMatrix constraints_;
  Eigen::MatrixXd saddle_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

namespace assembly {

/// Convenience one-shot solve (assembles a PlateSystem).
SaddleSolution forward_solve(const TensorBasis& basis, const MomentField& tau);

}  // namespace assembly
}  // namespace peenform

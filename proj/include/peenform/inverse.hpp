#pragma once

#include <Eigen/Dense>
#include <vector>

#include "peenform/assembly.hpp"
#include "peenform/calibration.hpp"
#include "peenform/model.hpp"

namespace peenform {

struct DisplacementConstraint {
  Point point;
  double value = 0.0;  // target midplane displacement
};

/// A = Q S kappa Gamma: moment coefficients to displacements at the
/// constraint points.
struct ResponseMap {
  Eigen::MatrixXd A;
  /// Norm of the full moment-to-displacement map; rows far below it count as zero.
  double scale = 0.0;
};

/// H from the smoothness functional
///   int [ tau^2 + L1 L2 |grad tau|^2
///         + L1^2 L2^2 (tau_11^2 + tau_22^2 + 2 tau_12^2) ] dA.
struct RegularizationMatrix {
  Eigen::MatrixXd H;
};

/// Uniform sample grid over the plate, corners included.
struct Grid {
  int n1 = 41;
  int n2 = 41;
};

struct IntensitySamples {
  std::vector<double> x1;
  std::vector<double> x2;
  Eigen::MatrixXd values;   // values(i, j) at (x1[i], x2[j])
  bool face_flip = false;   // some samples are negative: peen the opposite face there
};

/// Summary over samples at least 10% of each side away from the edges.
struct InteriorStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  /// (max - min) / |mean|
  double relative_spread = 0.0;
};

namespace inverse {

RegularizationMatrix assemble_regularization(const TensorBasis& basis, const FactorIntegrals& f);
RegularizationMatrix assemble_regularization(const TensorBasis& basis);

/// Rejects constraints outside the plate, more constraints than N^2, and
/// points closer than 1e-9 min(L1, L2) to each other.
void validate_constraints(const TensorBasis& basis, const std::vector<DisplacementConstraint>& c);

ResponseMap assemble_response_map(const PlateSystem& system,
                                  const std::vector<DisplacementConstraint>& constraints);
ResponseMap assemble_response_map(const TensorBasis& basis,
                                  const std::vector<DisplacementConstraint>& constraints);

/// Minimizes 1/2 t'Ht subject to A t = u by solving
///   [H A'] [t]   [0]
///   [A 0 ] [l] = [u].
/// A row that is a linear combination of earlier rows is dropped (with a
/// warning) when its target is consistent with theirs. The free fourth corner
/// is one: its displacement is zero for every moment field. An inconsistent
/// dependent row throws InputError naming it.
MomentField solve_inverse(const RegularizationMatrix& H, const ResponseMap& A,
                          const std::vector<DisplacementConstraint>& constraints);

/// I(x) = tau(x) / K on `grid`; negatives are kept and flagged.
IntensitySamples recover_intensity(const TensorBasis& basis, const MomentField& t,
                                   const CalibrationModel& model, const Grid& grid);

InteriorStats interior_stats(const IntensitySamples& samples, const PlateSpec& plate);

}  // namespace inverse
}  // namespace peenform

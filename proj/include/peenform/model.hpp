#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "peenform/basis.hpp"
#include "peenform/calibration.hpp"
#include "peenform/plate.hpp"

namespace peenform {

/// Plate coordinates with the origin at a corner: x1 in [0, L1], x2 in [0, L2].
struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

/// Tensor-product Legendre basis Phi_n = P_{n/N}(s1) P_{n%N}(s2) on a plate.
class TensorBasis {
 public:
  TensorBasis(int n, PlateSpec plate);

  int n() const { return n_; }
  int size() const { return n_ * n_; }
  const PlateSpec& plate() const { return plate_; }

  int index(int i1, int i2) const { return i1 * n_ + i2; }
  int x1_degree(int global) const { return global / n_; }
  int x2_degree(int global) const { return global % n_; }

  /// Throws InputError if `p` lies outside the plate beyond roundoff.
  void check_point(const Point& p) const;

 private:
  int n_;
  PlateSpec plate_;
};

struct MomentField {
  Eigen::VectorXd t;
};

struct DisplacementField {
  Eigen::VectorXd a;
};

struct Rect {
  double x1_min = 0.0;
  double x1_max = 0.0;
  double x2_min = 0.0;
  double x2_max = 0.0;

  bool contains(const Point& p) const {
    return p.x1 >= x1_min && p.x1 <= x1_max && p.x2 >= x2_min && p.x2 <= x2_max;
  }
  bool empty() const { return !(x1_max > x1_min) || !(x2_max > x2_min); }
};

/// Piecewise-constant peening intensity: `base_intensity` everywhere except
/// inside the (possibly overlapping) masked rectangles, where it is zero.
/// `sign` selects the peened face.
struct IntensityMap {
  double base_intensity = 0.0;
  std::vector<Rect> masked_regions;
  int sign = +1;

  void validate() const;
  double intensity_at(const Point& p) const;
  /// Masks clipped to [0,L1]x[0,L2]; empty ones dropped.
  IntensityMap clipped(const PlateSpec& plate) const;
  /// Every mask grown by `offset` on all four edges (shrunk if negative).
  IntensityMap with_mask_offset(double offset) const;
};

namespace model {

double basis_function(const TensorBasis& basis, int n, const Point& x, int d1 = 0, int d2 = 0);

/// All N^2 basis values (or derivatives) at one point.
Eigen::RowVectorXd basis_row(const TensorBasis& basis, const Point& x, int d1 = 0, int d2 = 0);

/// t_n = int(tau Phi_n) / int(Phi_n^2) with tau = sign K I(x). Integration is
/// split along the mask edges so every cell integrand is polynomial.
MomentField project_moment(const TensorBasis& basis, const IntensityMap& map,
                           const CalibrationModel& cal);

/// Projection of an arbitrary moment distribution, sampled with a Gauss rule
/// on each cell of a 16x16 partition.
MomentField project_moment(const TensorBasis& basis, const std::function<double(const Point&)>& tau);

double eval_displacement(const TensorBasis& basis, const DisplacementField& u, const Point& x);
double eval_moment(const TensorBasis& basis, const MomentField& tau, const Point& x);

struct MomentResultants {
  double M1 = 0.0;
  double M2 = 0.0;
  double M12 = 0.0;
};

/// Bending moment resultants of the plate at `x`:
///   M1  =  D1 (u,22 + v u,11) + D2 tau
///   M2  = -D1 (u,11 + v u,22) - D2 tau
///   M12 =  D1 (1 - v) u,12
MomentResultants moment_resultants(const TensorBasis& basis, const DisplacementField& u,
                                   const MomentField& tau, const Point& x);

/// Closed-form response to a uniform moment tau, with rigid-body terms chosen
/// so the three constrained corners sit at zero:
///   u = (6 tau / h^3) [ (L1^2 + L2^2)/4 - (x1 - L1/2)^2 - (x2 - L2/2)^2 ].
/// Needs N >= 3.
DisplacementField analytic_uniform_solution(const TensorBasis& basis, double tau);

}  // namespace model
}  // namespace peenform

#pragma once

namespace peenform {

/// Rectangular plate geometry and isotropic material constants. Lengths and
/// stresses share whatever unit system the caller uses (inches/psi in the
/// shipped documents).
struct PlateSpec {
  double L1 = 0.0;
  double L2 = 0.0;
  double h = 0.0;
  double E = 0.0;
  double v = 0.0;
  double alpha = 0.0;  // thermal expansion; only the temperature export reads it

  /// Bending rigidity E h^3 / (12 (1 - v^2)).
  double D1() const { return E * h * h * h / (12.0 * (1.0 - v * v)); }
  /// Thermal coupling modulus E / (1 - v).
  double D2() const { return E / (1.0 - v); }

  /// Throws InputError on non-positive dimensions/modulus or v outside (0, 0.5).
  /// A thickness that is not small compared to the sides only warns.
  void validate() const;
};

}  // namespace peenform

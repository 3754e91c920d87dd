#pragma once

#include <vector>

#include "peenform/plate.hpp"

namespace peenform {

struct CalibrationRecord {
  double intensity = 0.0;  // Almen intensity
  double u_max = 0.0;      // midplane rise of the uniformly peened coupon
  double tau = 0.0;        // thermal moment implied by u_max on the coupon
};

/// Linear moment-intensity law tau = K * I fitted on a specific coupon.
struct CalibrationModel {
  std::vector<CalibrationRecord> records;
  double slope_K = 0.0;
  PlateSpec coupon;
};

namespace calibration {

/// 2 h^3 |u_max| / (3 (l1^2 + l2^2)): the thermal moment whose free-plate
/// paraboloid rises u_max between corner and center.
double moment_from_max_displacement(double u_max, double h, double l1, double l2);

/// Midplane displacement from a height-gauge reading, M - h. Warns if M < h.
double midplane_from_measurement(double measured_height, double h);

/// Builds a record from one (intensity, gauge reading) pair on `coupon`.
CalibrationRecord record_from_measurement(double intensity, double measured_height,
                                          const PlateSpec& coupon);

/// Through-origin least squares K = sum(tau_i I_i) / sum(I_i^2).
CalibrationModel fit_slope(std::vector<CalibrationRecord> records, const PlateSpec& coupon);

/// sign * K * I.
double intensity_to_moment(double intensity, const CalibrationModel& model, int sign = +1);

/// Slope T0 of the linear through-thickness temperature T(x3) = T0 x3 that
/// carries moment tau: 12 tau / (alpha h^3).
double linear_temperature_slope(double tau, double alpha, double h);

/// Warns when `plate` differs in thickness or material from the coupon the
/// model was fitted on (K depends on both).
void check_applicability(const CalibrationModel& model, const PlateSpec& plate);

}  // namespace calibration
}  // namespace peenform

#include "peenform/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "peenform/error.hpp"

namespace peenform::calibration {

double moment_from_max_displacement(double u_max, double h, double l1, double l2) {
  if (!(h > 0.0 && l1 > 0.0 && l2 > 0.0))
    throw InputError("moment_from_max_displacement: lengths must be positive");
  return 2.0 * h * h * h * std::abs(u_max) / (3.0 * (l1 * l1 + l2 * l2));
}

double midplane_from_measurement(double measured_height, double h) {
  if (measured_height < h)
    warn("measured height " + std::to_string(measured_height) + " is below the thickness " +
         std::to_string(h) + " (measurement error or flatness deviation)");
  return measured_height - h;
}

CalibrationRecord record_from_measurement(double intensity, double measured_height,
                                          const PlateSpec& coupon) {
  CalibrationRecord r;
  r.intensity = intensity;
  r.u_max = midplane_from_measurement(measured_height, coupon.h);
  r.tau = moment_from_max_displacement(r.u_max, coupon.h, coupon.L1, coupon.L2);
  return r;
}

CalibrationModel fit_slope(std::vector<CalibrationRecord> records, const PlateSpec& coupon) {
  if (records.empty()) throw InputError("calibration needs at least one record");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!(r.intensity > 0.0))
      throw InputError("calibration record " + std::to_string(i) + " has non-positive intensity");
    num += r.tau * r.intensity;
    den += r.intensity * r.intensity;
  }
  CalibrationModel model;
  model.records = std::move(records);
  model.slope_K = num / den;
  model.coupon = coupon;
  if (!(model.slope_K > 0.0))
    throw InputError("calibration slope must be positive; all records have zero displacement");
  return model;
}

double intensity_to_moment(double intensity, const CalibrationModel& model, int sign) {
  if (intensity < 0.0) throw InputError("intensity must be non-negative");
  return (sign < 0 ? -1.0 : 1.0) * model.slope_K * intensity;
}

double linear_temperature_slope(double tau, double alpha, double h) {
  if (!(alpha > 0.0 && h > 0.0))
    throw InputError("linear_temperature_slope: alpha and h must be positive");
  return 12.0 * tau / (alpha * h * h * h);
}

void check_applicability(const CalibrationModel& model, const PlateSpec& plate) {
  const auto differs = [](double a, double b) { return std::abs(a - b) > 1e-9 * std::max(std::abs(a), std::abs(b)); };
  if (differs(model.coupon.h, plate.h))
    warn("calibration coupon thickness " + std::to_string(model.coupon.h) +
         " differs from plate thickness " + std::to_string(plate.h));
  if (differs(model.coupon.E, plate.E) || differs(model.coupon.v, plate.v))
    warn("calibration coupon material differs from the plate material");
}

}  // namespace peenform::calibration

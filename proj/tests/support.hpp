#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "peenform/error.hpp"
#include "peenform/model.hpp"

namespace peenform::testing {

// Legendre values and derivatives from the standard library and the Legendre
// ODE, independent of the recurrences under test. Interior points only.
inline double ref_legendre(int n, double s) { return std::legendre(n, s); }

inline double ref_legendre_d1(int n, double s) {
  if (n == 0) return 0.0;
  return n * (s * std::legendre(n, s) - std::legendre(n - 1, s)) / (s * s - 1.0);
}

inline double ref_legendre_d2(int n, double s) {
  return (2.0 * s * ref_legendre_d1(n, s) - n * (n + 1.0) * std::legendre(n, s)) / (1.0 - s * s);
}

// Derivative of order k of the shifted P_n at x in (0, L).
inline double ref_shifted(int n, double x, double length, int k) {
  const double s = (x - 0.5 * length) / (0.5 * length);
  const double j = 2.0 / length;
  if (k == 0) return ref_legendre(n, s);
  if (k == 1) return j * ref_legendre_d1(n, s);
  return j * j * ref_legendre_d2(n, s);
}

// Dense 30x30 Gauss-Legendre product rule on [0,L1]x[0,L2]; exact for
// polynomials up to degree 59 per direction.
inline double dense_integral(const std::function<double(double, double)>& f, double l1, double l2) {
  using rule = boost::math::quadrature::gauss<double, 30>;
  return rule::integrate(
      [&](double x1) { return rule::integrate([&](double x2) { return f(x1, x2); }, 0.0, l2); }, 0.0, l1);
}

inline double ref_phi(const TensorBasis& b, int n, double x1, double x2, int d1, int d2) {
  return ref_shifted(b.x1_degree(n), x1, b.plate().L1, d1) * ref_shifted(b.x2_degree(n), x2, b.plate().L2, d2);
}

inline PlateSpec nominal_plate() {
  PlateSpec p;
  p.L1 = 8.0;
  p.L2 = 8.0;
  p.h = 0.123;
  p.E = 1.0e7;
  p.v = 0.33;
  return p;
}

inline CalibrationModel unit_calibration(const PlateSpec& coupon, double slope = 1.0) {
  CalibrationModel m;
  m.coupon = coupon;
  m.slope_K = slope;
  return m;
}

// Collects warnings for the lifetime of the object.
class WarningCapture {
 public:
  WarningCapture() {
    previous_ = set_warning_handler([this](std::string_view m) {
      std::lock_guard lock(mutex_);
      messages_.emplace_back(m);
    });
  }
  ~WarningCapture() { set_warning_handler(previous_); }
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  std::vector<std::string> messages() const {
    std::lock_guard lock(mutex_);
    return messages_;
  }
  bool any_contains(const std::string& needle) const {
    for (const auto& m : messages())
      if (m.find(needle) != std::string::npos) return true;
    return false;
  }

 private:
  WarningHandler previous_;
  mutable std::mutex mutex_;
  std::vector<std::string> messages_;
};

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace peenform::testing

#include "peenform/plate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "peenform/error.hpp"

namespace peenform {

void PlateSpec::validate() const {
  auto positive = [](double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw InputError(std::string("plate ") + name + " must be positive and finite, got " +
                       std::to_string(value));
  };
  positive(L1, "L1");
  positive(L2, "L2");
  positive(h, "h");
  positive(E, "E");
  if (!(v > 0.0 && v < 0.5))
    throw InputError("plate Poisson ratio must lie in (0, 0.5), got " + std::to_string(v));
  if (alpha < 0.0 || !std::isfinite(alpha))
    throw InputError("plate alpha must be non-negative, got " + std::to_string(alpha));
  if (h > 0.1 * std::min(L1, L2))
    warn("plate thickness " + std::to_string(h) + " is not small compared to its sides; "
         "thin-plate bending may be inaccurate");
}

}  // namespace peenform

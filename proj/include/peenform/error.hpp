#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace peenform {

/// Bad caller input: out-of-range arguments, malformed documents, infeasible
/// constraint sets. The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a trustworthy answer (singular
/// system, degenerate statistics). The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(std::string_view)>;

// Non-fatal diagnostics (advisory geometry, M < h, calibration mismatch).
// The default handler writes "warning: ..." to stderr.
void warn(std::string_view message);

// Installs a process-wide handler and returns the previous one.
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace peenform

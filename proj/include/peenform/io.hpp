#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "peenform/calibration.hpp"
#include "peenform/inverse.hpp"
#include "peenform/model.hpp"
#include "peenform/uq.hpp"

namespace peenform::io {

using nlohmann::json;

inline constexpr const char* kSchemaTag = "peenform/v1";

struct Units {
  std::string length = "in";
  std::string stress = "psi";

  bool operator==(const Units&) const = default;
};

/// How to treat keys a document does not define: warn, or reject with
/// --strict.
struct ReadOptions {
  bool strict = false;
};

struct Recipe {
  Units units;
  PlateSpec plate;
  int basis_n = 9;
  IntensityMap intensity;
  std::optional<CalibrationModel> calibration;
};

struct CalibrationDocument {
  Units units;
  CalibrationModel model;
};

struct ConstraintsDocument {
  Units units;
  std::vector<DisplacementConstraint> constraints;
};

struct UncertaintyDocument {
  Units units;
  UncertaintySpec spec;
};

json read_json_file(const std::filesystem::path& path);

/// Recipes may reference a calibration file by path, relative to `base_dir`.
Recipe parse_recipe(const json& doc, const ReadOptions& opt,
                    const std::filesystem::path& base_dir = {});
Recipe load_recipe(const std::filesystem::path& path, const ReadOptions& opt);

CalibrationDocument parse_calibration(const json& doc, const ReadOptions& opt);
ConstraintsDocument parse_constraints(const json& doc, const ReadOptions& opt);
UncertaintyDocument parse_uncertainty(const json& doc, const ReadOptions& opt);
/// {"schema", "units", "plate": {...}} - a bare plate description.
std::pair<Units, PlateSpec> parse_plate_document(const json& doc, const ReadOptions& opt);

json to_json(const PlateSpec& plate);
json to_json(const Units& units);
json calibration_to_json(const CalibrationModel& model, const Units& units);
json mc_summary_to_json(const McSummary& summary, const UncertaintySpec& spec, const Units& units);
json anova_to_json(const AnovaResult& result);

/// Checks an emitted document against its kind's required fields and types.
/// Throws InputError describing the first violation.
void validate_output(const json& doc);

/// Row-major grid CSV: header "x1_<len>,x2_<len>,<quantity>", x2 varying fastest.
std::string grid_csv(const std::vector<double>& x1, const std::vector<double>& x2,
                     const Eigen::MatrixXd& values, const std::string& quantity, const Units& units);

/// Parses a numeric CSV (optional header row, comma separated).
Eigen::MatrixXd read_numeric_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal text for a double.
std::string format_number(double x);

}  // namespace peenform::io

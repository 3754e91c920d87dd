#include "peenform/io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>
#include <sstream>

#include "peenform/error.hpp"

namespace peenform::io {
namespace {

// Tracks which keys of a JSON object were consumed so the rest can be
// reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string where, const ReadOptions& opt)
      : obj_(obj), where_(std::move(where)), opt_(opt) {
    if (!obj_.is_object()) throw InputError(where_ + ": expected a JSON object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw InputError(where_ + ": missing required field \"" + key + "\"");
    return *v;
  }

  double number(const std::string& key) { return as_number(require(key), key); }

  double number_or(const std::string& key, double fallback) {
    const json* v = find(key);
    return v ? as_number(*v, key) : fallback;
  }

  int integer_or(const std::string& key, int fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw InputError(where_ + ": field \"" + key + "\" must be an integer");
    return v->get<int>();
  }

  std::string string_or(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw InputError(where_ + ": field \"" + key + "\" must be a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (seen_.count(key)) continue;
      const std::string msg = where_ + ": unknown field \"" + key + "\"";
      if (opt_.strict) throw InputError(msg + " (strict mode)");
      warn(msg + " ignored");
    }
  }

  const std::string& where() const { return where_; }

 private:
  double as_number(const json& v, const std::string& key) const {
    if (!v.is_number()) throw InputError(where_ + ": field \"" + key + "\" must be a number");
    return v.get<double>();
  }

  const json& obj_;
  std::string where_;
  const ReadOptions& opt_;
  std::set<std::string> seen_;
};

void check_header(ObjectReader& r, const char* kind) {
  const json& schema = r.require("schema");
  if (!schema.is_string() || schema.get<std::string>() != kSchemaTag)
    throw InputError(r.where() + ": unsupported schema (expected \"" + kSchemaTag + "\")");
  const json* k = r.find("kind");
  if (k && (!k->is_string() || k->get<std::string>() != kind))
    throw InputError(r.where() + ": expected kind \"" + kind + "\"");
  r.find("name");
  r.find("description");
}

Units read_units(ObjectReader& parent, const ReadOptions& opt) {
  Units u;
  const json* v = parent.find("units");
  if (!v) return u;
  ObjectReader r(*v, parent.where() + ".units", opt);
  u.length = r.string_or("length", u.length);
  u.stress = r.string_or("stress", u.stress);
  r.finish();
  return u;
}

PlateSpec read_plate(const json& v, const std::string& where, const ReadOptions& opt) {
  ObjectReader r(v, where, opt);
  PlateSpec p;
  p.L1 = r.number("L1");
  p.L2 = r.number("L2");
  p.h = r.number("h");
  p.E = r.number("E");
  p.v = r.number("v");
  p.alpha = r.number_or("alpha", 0.0);
  r.finish();
  p.validate();
  return p;
}

Range read_range(ObjectReader& r, const std::string& key, Range fallback) {
  const json* v = r.find(key);
  if (!v) return fallback;
  if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
    throw InputError(r.where() + ": field \"" + key + "\" must be a [lo, hi] pair");
  return {(*v)[0].get<double>(), (*v)[1].get<double>()};
}

CalibrationModel read_calibration_body(ObjectReader& r, const ReadOptions& opt) {
  const PlateSpec coupon = read_plate(r.require("coupon"), r.where() + ".coupon", opt);
  const json* records = r.find("records");
  const json* slope = r.find("slope_K");
  if (!records && !slope)
    throw InputError(r.where() + ": calibration needs \"records\" or \"slope_K\"");
  std::optional<double> stated;
  if (slope) {
    if (!slope->is_number()) throw InputError(r.where() + ": slope_K must be a number");
    stated = slope->get<double>();
  }
  if (!records || records->empty()) {
    if (!(*stated > 0.0)) throw InputError(r.where() + ": slope_K must be positive");
    CalibrationModel m;
    m.coupon = coupon;
    m.slope_K = *stated;
    return m;
  }
  if (!records->is_array()) throw InputError(r.where() + ": records must be an array");
  std::vector<CalibrationRecord> recs;
  for (std::size_t i = 0; i < records->size(); ++i) {
    ObjectReader rr((*records)[i], r.where() + ".records[" + std::to_string(i) + "]", opt);
    const double intensity = rr.number("intensity");
    const json* m = rr.find("measured_height");
    const json* u = rr.find("u_max");
    rr.find("tau");
    if (!m && !u)
      throw InputError(rr.where() + ": record needs \"measured_height\" or \"u_max\"");
    if (m && !m->is_number()) throw InputError(rr.where() + ": measured_height must be a number");
    if (u && !u->is_number()) throw InputError(rr.where() + ": u_max must be a number");
    CalibrationRecord rec;
    if (m) {
      rec = calibration::record_from_measurement(intensity, m->get<double>(), coupon);
    } else {
      rec.intensity = intensity;
      rec.u_max = u->get<double>();
      rec.tau = calibration::moment_from_max_displacement(rec.u_max, coupon.h, coupon.L1, coupon.L2);
    }
    rr.finish();
    recs.push_back(rec);
  }
  CalibrationModel model = calibration::fit_slope(std::move(recs), coupon);
  if (stated && std::abs(*stated - model.slope_K) > 1e-9 * model.slope_K)
    throw InputError(r.where() + ": stated slope_K disagrees with the slope fitted from records");
  return model;
}

}  // namespace

std::string format_number(double x) { return fmt::format("{}", x); }

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
}

Recipe parse_recipe(const json& doc, const ReadOptions& opt, const std::filesystem::path& base_dir) {
  ObjectReader r(doc, "recipe", opt);
  check_header(r, "recipe");
  Recipe recipe;
  recipe.units = read_units(r, opt);
  recipe.plate = read_plate(r.require("plate"), "recipe.plate", opt);
  recipe.basis_n = r.integer_or("basis_n", 9);
  if (recipe.basis_n < 2 || recipe.basis_n > basis::kMaxDegree + 1)
    throw InputError("recipe.basis_n must lie in [2, 13], got " + std::to_string(recipe.basis_n));

  if (const json* iv = r.find("intensity")) {
    ObjectReader ir(*iv, "recipe.intensity", opt);
    recipe.intensity.base_intensity = ir.number("base");
    recipe.intensity.sign = ir.integer_or("sign", 1);
    if (const json* masks = ir.find("masks")) {
      if (!masks->is_array()) throw InputError("recipe.intensity.masks must be an array");
      for (std::size_t i = 0; i < masks->size(); ++i) {
        ObjectReader mr((*masks)[i], "recipe.intensity.masks[" + std::to_string(i) + "]", opt);
        Rect rect;
        rect.x1_min = mr.number("x1_min");
        rect.x1_max = mr.number("x1_max");
        rect.x2_min = mr.number("x2_min");
        rect.x2_max = mr.number("x2_max");
        mr.finish();
        recipe.intensity.masked_regions.push_back(rect);
      }
    }
    ir.finish();
    recipe.intensity.validate();
  }

  if (const json* cv = r.find("calibration")) {
    if (cv->is_string()) {
      const auto path = base_dir / cv->get<std::string>();
      const CalibrationDocument cal = parse_calibration(read_json_file(path), opt);
      if (!(cal.units == recipe.units))
        throw InputError("recipe units (" + recipe.units.length + ", " + recipe.units.stress +
                         ") do not match calibration file units (" + cal.units.length + ", " +
                         cal.units.stress + ")");
      recipe.calibration = cal.model;
    } else {
      ObjectReader cr(*cv, "recipe.calibration", opt);
      recipe.calibration = read_calibration_body(cr, opt);
      cr.finish();
    }
  }
  r.finish();
  return recipe;
}

Recipe load_recipe(const std::filesystem::path& path, const ReadOptions& opt) {
  return parse_recipe(read_json_file(path), opt, path.parent_path());
}

CalibrationDocument parse_calibration(const json& doc, const ReadOptions& opt) {
  ObjectReader r(doc, "calibration", opt);
  check_header(r, "calibration");
  CalibrationDocument out;
  out.units = read_units(r, opt);
  out.model = read_calibration_body(r, opt);
  r.finish();
  return out;
}

ConstraintsDocument parse_constraints(const json& doc, const ReadOptions& opt) {
  ObjectReader r(doc, "constraints", opt);
  check_header(r, "constraints");
  ConstraintsDocument out;
  out.units = read_units(r, opt);
  const json& list = r.require("constraints");
  if (!list.is_array()) throw InputError("constraints.constraints must be an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    ObjectReader cr(list[i], "constraints[" + std::to_string(i) + "]", opt);
    DisplacementConstraint c;
    c.point.x1 = cr.number("x1");
    c.point.x2 = cr.number("x2");
    c.value = cr.number("u3");
    cr.finish();
    out.constraints.push_back(c);
  }
  r.finish();
  return out;
}

UncertaintyDocument parse_uncertainty(const json& doc, const ReadOptions& opt) {
  ObjectReader r(doc, "uncertainty", opt);
  check_header(r, "uncertainty");
  UncertaintyDocument out;
  out.units = read_units(r, opt);
  auto& s = out.spec;
  s.L1 = read_range(r, "L1", s.L1);
  s.L2 = read_range(r, "L2", s.L2);
  s.h = read_range(r, "h", s.h);
  s.mask_offset = read_range(r, "mask_offset", s.mask_offset);
  s.measurement_noise = read_range(r, "measurement_noise", s.measurement_noise);
  s.M = read_range(r, "M", s.M);
  s.calibration_intensity = r.number_or("calibration_intensity", s.calibration_intensity);
  s.trial_count = r.integer_or("trial_count", s.trial_count);
  if (const json* seed = r.find("seed")) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<long long>() >= 0))
      throw InputError("uncertainty.seed must be a non-negative integer");
    s.seed = seed->get<std::uint64_t>();
  }
  const std::string sampling = r.string_or("sampling", "latin_hypercube");
  if (sampling == "latin_hypercube") {
    s.sampling = Sampling::latin_hypercube;
  } else if (sampling == "independent") {
    s.sampling = Sampling::independent;
  } else {
    throw InputError("uncertainty.sampling must be \"latin_hypercube\" or \"independent\"");
  }
  r.finish();
  s.validate();
  return out;
}

std::pair<Units, PlateSpec> parse_plate_document(const json& doc, const ReadOptions& opt) {
  ObjectReader r(doc, "plate document", opt);
  check_header(r, "plate");
  const Units units = read_units(r, opt);
  const PlateSpec plate = read_plate(r.require("plate"), "plate", opt);
  r.finish();
  return {units, plate};
}

json to_json(const PlateSpec& p) {
  json j{{"L1", p.L1}, {"L2", p.L2}, {"h", p.h}, {"E", p.E}, {"v", p.v}};
  if (p.alpha > 0.0) j["alpha"] = p.alpha;
  return j;
}

json to_json(const Units& u) { return {{"length", u.length}, {"stress", u.stress}}; }

json calibration_to_json(const CalibrationModel& model, const Units& units) {
  json records = json::array();
  for (const auto& r : model.records)
    records.push_back({{"intensity", r.intensity}, {"u_max", r.u_max}, {"tau", r.tau}});
  return {{"schema", kSchemaTag}, {"kind", "calibration"}, {"units", to_json(units)},
          {"coupon", to_json(model.coupon)}, {"slope_K", model.slope_K}, {"records", records}};
}

json mc_summary_to_json(const McSummary& s, const UncertaintySpec& spec, const Units& units) {
  return {{"schema", kSchemaTag},
          {"kind", "mc_summary"},
          {"units", to_json(units)},
          {"quantity", "predicted_measured_height"},
          {"trial_count", spec.trial_count},
          {"seed", spec.seed},
          {"sampling", spec.sampling == Sampling::latin_hypercube ? "latin_hypercube" : "independent"},
          {"mean", s.mean},
          {"std", s.std},
          {"histogram", {{"edges", s.histogram.edges}, {"counts", s.histogram.counts}}},
          {"samples", s.samples}};
}

json anova_to_json(const AnovaResult& a) {
  return {{"schema", kSchemaTag},
          {"kind", "anova"},
          {"level", a.level},
          {"df", {{"rows", a.df_rows}, {"cols", a.df_cols}, {"error", a.df_error}}},
          {"ss", {{"rows", a.ss_rows}, {"cols", a.ss_cols}, {"error", a.ss_error}, {"total", a.ss_total}}},
          {"F_rows", a.F_rows},
          {"F_cols", a.F_cols},
          {"p_rows", a.p_rows},
          {"p_cols", a.p_cols},
          {"significant_rows", a.significant_rows},
          {"significant_cols", a.significant_cols}};
}

void validate_output(const json& doc) {
  const auto fail = [](const std::string& msg) { throw InputError("output schema violation: " + msg); };
  if (!doc.is_object()) fail("document is not an object");
  if (doc.value("schema", "") != kSchemaTag) fail("missing or wrong schema tag");
  if (!doc.contains("kind") || !doc["kind"].is_string()) fail("missing kind");
  const std::string kind = doc["kind"];
  const auto need = [&](const char* key, auto pred, const char* what) {
    if (!doc.contains(key) || !pred(doc[key])) fail(kind + "." + key + " must be " + what);
  };
  const auto is_num = [](const json& j) { return j.is_number(); };
  const auto is_bool = [](const json& j) { return j.is_boolean(); };
  const auto is_obj = [](const json& j) { return j.is_object(); };
  const auto is_num_array = [](const json& j) {
    if (!j.is_array()) return false;
    for (const auto& e : j)
      if (!e.is_number()) return false;
    return true;
  };
  if (kind == "calibration") {
    need("coupon", is_obj, "an object");
    need("slope_K", is_num, "a number");
    need("records", [](const json& j) { return j.is_array(); }, "an array");
    parse_calibration(doc, ReadOptions{true});
  } else if (kind == "forward_summary") {
    need("basis_n", is_num, "a number");
    need("center_displacement", is_num, "a number");
    need("predicted_measured_height", is_num, "a number");
    need("corners", is_obj, "an object");
    for (const char* c : {"x0_y0", "xL_y0", "x0_yL", "xL_yL"})
      if (!doc["corners"].contains(c) || !doc["corners"][c].is_number()) fail(std::string("corner ") + c);
  } else if (kind == "inverse_result") {
    need("basis_n", is_num, "a number");
    need("coefficients", is_num_array, "a numeric array");
    need("slope_K", is_num, "a number");
    need("interior", is_obj, "an object");
    need("face_flip", is_bool, "a boolean");
    need("constraints", [](const json& j) { return j.is_array(); }, "an array");
  } else if (kind == "mc_summary") {
    need("trial_count", is_num, "a number");
    need("mean", is_num, "a number");
    need("std", is_num, "a number");
    need("samples", is_num_array, "a numeric array");
    need("histogram", is_obj, "an object");
    if (doc["samples"].size() != doc["trial_count"].get<std::size_t>()) fail("sample count != trial_count");
  } else if (kind == "anova") {
    need("F_rows", is_num, "a number");
    need("F_cols", is_num, "a number");
    need("p_rows", is_num, "a number");
    need("p_cols", is_num, "a number");
    need("significant_rows", is_bool, "a boolean");
    need("significant_cols", is_bool, "a boolean");
    need("df", is_obj, "an object");
  } else {
    fail("unknown kind \"" + kind + "\"");
  }
}

std::string grid_csv(const std::vector<double>& x1, const std::vector<double>& x2,
                     const Eigen::MatrixXd& values, const std::string& quantity, const Units& units) {
  std::string out = fmt::format("x1_{0},x2_{0},{1}\n", units.length, quantity);
  for (std::size_t i = 0; i < x1.size(); ++i)
    for (std::size_t j = 0; j < x2.size(); ++j)
      out += fmt::format("{},{},{}\n", x1[i], x2[j], values(i, j));
  return out;
}

Eigen::MatrixXd read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
        row.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw InputError(path.string() + ": non-numeric row \"" + line + "\"");
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(path.string() + ": ragged CSV rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path.string() + ": no data rows");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

}  // namespace peenform::io

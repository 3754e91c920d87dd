#include "peenform/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <unistd.h>

#include "peenform/assembly.hpp"
#include "peenform/error.hpp"
#include "peenform/inverse.hpp"
#include "peenform/uq.hpp"

namespace peenform::cli {
namespace {

std::string render(const io::json& doc) {
  io::validate_output(doc);
  return doc.dump(2) + "\n";
}

const CalibrationModel& require_calibration(const io::Recipe& recipe) {
  if (!recipe.calibration) throw InputError("recipe has no calibration (inline or by path)");
  return *recipe.calibration;
}

MomentField recipe_moment(const io::Recipe& recipe, const TensorBasis& basis) {
  if (recipe.intensity.base_intensity == 0.0 && !recipe.calibration)
    return MomentField{Eigen::VectorXd::Zero(basis.size())};
  const CalibrationModel& cal = require_calibration(recipe);
  calibration::check_applicability(cal, recipe.plate);
  return model::project_moment(basis, recipe.intensity, cal);
}

std::string value_grid(const std::vector<double>& x1, const std::vector<double>& x2,
                       const std::function<double(const Point&)>& f, const std::string& quantity,
                       const io::Units& units) {
  Eigen::MatrixXd values(x1.size(), x2.size());
  for (std::size_t i = 0; i < x1.size(); ++i)
    for (std::size_t j = 0; j < x2.size(); ++j) values(i, j) = f({x1[i], x2[j]});
  return io::grid_csv(x1, x2, values, quantity, units);
}

void check_units(const io::Units& a, const io::Units& b, const char* what) {
  if (!(a == b))
    throw InputError(fmt::format("{} units ({}, {}) do not match recipe units ({}, {})", what, b.length,
                                 b.stress, a.length, a.stress));
}

}  // namespace

GridDims parse_grid(const std::string& text) {
  GridDims g;
  char sep = 0;
  std::string rest;
  std::istringstream in(text);
  if (!(in >> g.n1 >> sep >> g.n2) || (sep != 'x' && sep != 'X') || (in >> rest))
    throw InputError("--grid expects MxN, got \"" + text + "\"");
  if (g.n1 < 2 || g.n2 < 2 || g.n1 > 100000 || g.n2 > 100000)
    throw InputError("--grid dimensions must be at least 2x2");
  return g;
}

std::vector<double> axis_samples(double length, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = length * i / (n - 1);
  x.back() = length;
  return x;
}

std::vector<OutputFile> cmd_calibrate(const std::filesystem::path& measurements,
                                      const std::filesystem::path& coupon_path, const io::ReadOptions& opt) {
  const auto [units, coupon] = io::parse_plate_document(io::read_json_file(coupon_path), opt);
  const Eigen::MatrixXd table = io::read_numeric_csv(measurements);
  if (table.cols() != 2)
    throw InputError(measurements.string() + ": expected two columns (intensity, measured_height)");
  std::vector<CalibrationRecord> records;
  for (Eigen::Index r = 0; r < table.rows(); ++r)
    records.push_back(calibration::record_from_measurement(table(r, 0), table(r, 1), coupon));
  const CalibrationModel model = calibration::fit_slope(std::move(records), coupon);
  return {{"calibration.json", render(io::calibration_to_json(model, units))}};
}

std::vector<OutputFile> cmd_forward(const io::Recipe& recipe, GridDims grid) {
  const TensorBasis basis(recipe.basis_n, recipe.plate);
  const PlateSystem system(basis);
  const MomentField tau = recipe_moment(recipe, basis);
  const DisplacementField u{system.solve(tau).a};
  const auto at = [&](double x1, double x2) { return model::eval_displacement(basis, u, {x1, x2}); };
  const double L1 = recipe.plate.L1;
  const double L2 = recipe.plate.L2;
  const double center = at(L1 / 2, L2 / 2);

  io::json summary{{"schema", io::kSchemaTag},
                   {"kind", "forward_summary"},
                   {"units", io::to_json(recipe.units)},
                   {"plate", io::to_json(recipe.plate)},
                   {"basis_n", recipe.basis_n},
                   {"center_displacement", center},
                   {"predicted_measured_height", center + recipe.plate.h},
                   {"corners",
                    {{"x0_y0", at(0, 0)}, {"xL_y0", at(L1, 0)}, {"x0_yL", at(0, L2)}, {"xL_yL", at(L1, L2)}}},
                   {"condition_estimate", system.condition_estimate()}};
  const auto x1 = axis_samples(L1, grid.n1);
  const auto x2 = axis_samples(L2, grid.n2);
  return {{"displacement.csv",
           value_grid(x1, x2, [&](const Point& p) { return model::eval_displacement(basis, u, p); },
                      "u3_" + recipe.units.length, recipe.units)},
          {"forward_summary.json", render(summary)}};
}

std::vector<OutputFile> cmd_inverse(const io::Recipe& recipe, const io::ConstraintsDocument& doc,
                                    GridDims grid) {
  check_units(recipe.units, doc.units, "constraints");
  const CalibrationModel& cal = require_calibration(recipe);
  calibration::check_applicability(cal, recipe.plate);
  const TensorBasis basis(recipe.basis_n, recipe.plate);
  const PlateSystem system(basis);
  inverse::validate_constraints(basis, doc.constraints);
  const ResponseMap A = inverse::assemble_response_map(system, doc.constraints);
  const MomentField t = inverse::solve_inverse(inverse::assemble_regularization(basis), A, doc.constraints);
  const IntensitySamples samples = inverse::recover_intensity(basis, t, cal, Grid{grid.n1, grid.n2});
  const InteriorStats stats = inverse::interior_stats(samples, recipe.plate);
  const DisplacementField u{system.solve(t).a};

  io::json constraints = io::json::array();
  for (const auto& c : doc.constraints)
    constraints.push_back({{"x1", c.point.x1},
                           {"x2", c.point.x2},
                           {"u3", c.value},
                           {"achieved", model::eval_displacement(basis, u, c.point)}});
  io::json result{{"schema", io::kSchemaTag},
                  {"kind", "inverse_result"},
                  {"units", io::to_json(recipe.units)},
                  {"plate", io::to_json(recipe.plate)},
                  {"basis_n", recipe.basis_n},
                  {"slope_K", cal.slope_K},
                  {"coefficients", std::vector<double>(t.t.data(), t.t.data() + t.t.size())},
                  {"interior",
                   {{"mean", stats.mean},
                    {"min", stats.min},
                    {"max", stats.max},
                    {"relative_spread", stats.relative_spread}}},
                  {"face_flip", samples.face_flip},
                  {"constraints", constraints}};
  if (samples.face_flip) warn("recovered intensity is negative in places: peen the opposite face there");
  return {{"intensity.csv", io::grid_csv(samples.x1, samples.x2, samples.values, "intensity", recipe.units)},
          {"inverse_result.json", render(result)}};
}

std::vector<OutputFile> cmd_montecarlo(const io::Recipe& recipe, const io::UncertaintyDocument& doc,
                                       int workers) {
  check_units(recipe.units, doc.units, "uncertainty");
  const McRecipe mc{recipe.intensity, recipe.plate, recipe.basis_n};
  const McSummary summary = uq::run_monte_carlo(doc.spec, mc, workers);
  std::string samples = "trial,predicted_measured_height_" + recipe.units.length + "\n";
  for (std::size_t i = 0; i < summary.samples.size(); ++i)
    samples += fmt::format("{},{}\n", i, summary.samples[i]);
  return {{"mc_summary.json", render(io::mc_summary_to_json(summary, doc.spec, recipe.units))},
          {"mc_samples.csv", std::move(samples)}};
}

std::vector<OutputFile> cmd_convergence(const io::Recipe& recipe, int n_min, int n_max) {
  if (n_min < 2 || n_max > basis::kMaxDegree + 1 || n_min >= n_max)
    throw InputError(fmt::format("need 2 <= n-min < n-max <= 13, got {}..{}", n_min, n_max));
  const auto x1 = axis_samples(recipe.plate.L1, 41);
  const auto x2 = axis_samples(recipe.plate.L2, 41);
  const Point mid{recipe.plate.L1 / 2, recipe.plate.L2 / 2};
  std::string out = "N,center_u3,max_abs_change,l2_change,relative_center_change\n";
  Eigen::MatrixXd previous;
  double previous_center = 0.0;
  for (int n = n_min; n <= n_max; ++n) {
    const TensorBasis basis(n, recipe.plate);
    const DisplacementField u{PlateSystem(basis).solve(recipe_moment(recipe, basis)).a};
    Eigen::MatrixXd grid(x1.size(), x2.size());
    for (std::size_t i = 0; i < x1.size(); ++i)
      for (std::size_t j = 0; j < x2.size(); ++j) grid(i, j) = model::eval_displacement(basis, u, {x1[i], x2[j]});
    const double center = model::eval_displacement(basis, u, mid);
    if (n == n_min) {
      out += fmt::format("{},{},,,\n", n, center);
    } else {
      const Eigen::MatrixXd d = grid - previous;
      const double rms = std::sqrt(d.squaredNorm() / static_cast<double>(d.size()));
      const double rel = previous_center != 0.0 ? std::abs(center - previous_center) / std::abs(previous_center)
                                                : std::abs(center - previous_center);
      out += fmt::format("{},{},{},{},{}\n", n, center, d.cwiseAbs().maxCoeff(), rms, rel);
    }
    previous = std::move(grid);
    previous_center = center;
  }
  return {{"convergence.csv", std::move(out)}};
}

std::vector<OutputFile> cmd_anova(const std::filesystem::path& table, double level) {
  const AnovaResult r = uq::anova_two_way_no_replication(io::read_numeric_csv(table), level);
  return {{"anova.json", render(io::anova_to_json(r))}};
}

std::vector<OutputFile> cmd_temperature(const io::Recipe& recipe, GridDims grid) {
  const PlateSpec& plate = recipe.plate;
  if (!(plate.alpha > 0.0)) throw InputError("temperature needs a positive plate.alpha");
  double slope = 0.0;
  if (recipe.intensity.base_intensity != 0.0) {
    const CalibrationModel& cal = require_calibration(recipe);
    calibration::check_applicability(cal, plate);
    slope = cal.slope_K;
  }
  const IntensityMap map = recipe.intensity.clipped(plate);
  const auto x1 = axis_samples(plate.L1, grid.n1);
  const auto x2 = axis_samples(plate.L2, grid.n2);
  const auto t0 = [&](const Point& p) {
    return calibration::linear_temperature_slope(map.sign * slope * map.intensity_at(p), plate.alpha, plate.h);
  };
  return {{"temperature.csv", value_grid(x1, x2, t0, "T0_per_" + recipe.units.length, recipe.units)}};
}

void write_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string suffix = fmt::format(".tmp{}", static_cast<long>(::getpid()));
  std::vector<fs::path> temps;
  try {
    for (const auto& f : files) {
      const fs::path tmp = dir / (f.name.string() + suffix);
      temps.push_back(tmp);
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << f.content;
      out.close();
      if (!out) throw InputError("cannot write " + tmp.string());
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
    throw;
  }
  for (std::size_t i = 0; i < files.size(); ++i) fs::rename(temps[i], dir / files[i].name);
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Shot peen forming plate model"};
  app.require_subcommand(1);

  bool strict = false;
  std::string out_dir = ".";
  std::string recipe_path;
  std::string grid_text = "41x41";
  app.add_flag("--strict", strict, "Reject unknown fields in input documents");

  const auto add_out = [&](CLI::App* c) {
    c->add_option("--out", out_dir, "Output directory")->capture_default_str();
  };
  const auto add_recipe = [&](CLI::App* c) {
    c->add_option("--recipe", recipe_path, "Recipe JSON")->required();
  };
  const auto add_grid = [&](CLI::App* c) {
    c->add_option("--grid", grid_text, "Output grid MxN")->capture_default_str();
  };
  const auto add_strict = [&](CLI::App* c) { c->add_flag("--strict", strict, "Reject unknown fields"); };

  std::string measurements, coupon;
  auto* calibrate = app.add_subcommand("calibrate", "Fit the moment-intensity slope from coupon measurements");
  calibrate->add_option("--measurements", measurements, "CSV of intensity,measured_height")->required();
  calibrate->add_option("--coupon", coupon, "Coupon plate JSON")->required();
  add_out(calibrate);
  add_strict(calibrate);

  auto* forward = app.add_subcommand("forward", "Solve for the plate shape of a recipe");
  add_recipe(forward);
  add_grid(forward);
  add_out(forward);
  add_strict(forward);

  std::string constraints_path;
  auto* inverse_cmd = app.add_subcommand("inverse", "Find a smooth intensity map meeting displacement targets");
  add_recipe(inverse_cmd);
  inverse_cmd->add_option("--constraints", constraints_path, "Constraints JSON")->required();
  add_grid(inverse_cmd);
  add_out(inverse_cmd);
  add_strict(inverse_cmd);

  std::string uncertainty_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  int workers = 1;
  auto* montecarlo = app.add_subcommand("montecarlo", "Propagate input uncertainty to the predicted height");
  add_recipe(montecarlo);
  montecarlo->add_option("--uncertainty", uncertainty_path, "Uncertainty JSON (defaults if omitted)");
  montecarlo->add_option("--seed", seed, "Random seed");
  montecarlo->add_option("--trials", trials, "Trial count")->check(CLI::PositiveNumber);
  montecarlo->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  add_out(montecarlo);
  add_strict(montecarlo);

  int n_min = 3, n_max = 13;
  auto* convergence = app.add_subcommand("convergence", "Center displacement versus basis size");
  add_recipe(convergence);
  convergence->add_option("--n-min", n_min, "Smallest basis size")->capture_default_str();
  convergence->add_option("--n-max", n_max, "Largest basis size")->capture_default_str();
  add_out(convergence);
  add_strict(convergence);

  std::string table_path;
  double level = 0.10;
  auto* anova = app.add_subcommand("anova", "Two-way ANOVA without replication on a measurement table");
  anova->add_option("--table", table_path, "Numeric CSV, one observation per cell")->required();
  anova->add_option("--level", level, "Significance level")->capture_default_str();
  add_out(anova);
  add_strict(anova);

  auto* temperature = app.add_subcommand("temperature", "Equivalent through-thickness temperature slope");
  add_recipe(temperature);
  add_grid(temperature);
  add_out(temperature);
  add_strict(temperature);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    const io::ReadOptions opt{strict};
    std::vector<OutputFile> files;
    if (*calibrate) {
      files = cmd_calibrate(measurements, coupon, opt);
    } else if (*anova) {
      if (!(level > 0.0 && level < 1.0)) throw InputError("--level must lie in (0, 1)");
      files = cmd_anova(table_path, level);
    } else {
      const io::Recipe recipe = io::load_recipe(recipe_path, opt);
      if (*forward) {
        files = cmd_forward(recipe, parse_grid(grid_text));
      } else if (*inverse_cmd) {
        files = cmd_inverse(recipe, io::parse_constraints(io::read_json_file(constraints_path), opt),
                            parse_grid(grid_text));
      } else if (*montecarlo) {
        io::UncertaintyDocument doc;
        doc.units = recipe.units;
        if (!uncertainty_path.empty()) doc = io::parse_uncertainty(io::read_json_file(uncertainty_path), opt);
        if (seed) doc.spec.seed = *seed;
        if (trials) doc.spec.trial_count = *trials;
        doc.spec.validate();
        files = cmd_montecarlo(recipe, doc, workers);
      } else if (*convergence) {
        files = cmd_convergence(recipe, n_min, n_max);
      } else if (*temperature) {
        files = cmd_temperature(recipe, parse_grid(grid_text));
      }
    }
    write_outputs(out_dir, files);
    for (const auto& f : files) std::cout << (std::filesystem::path(out_dir) / f.name).string() << "\n";
    return kExitOk;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace peenform::cli

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "peenform/cli.hpp"
#include "peenform/error.hpp"

using namespace peenform;
using doctest::Approx;
using io::json;
namespace fs = std::filesystem;

namespace {

const fs::path kData = PEENFORM_DATA_DIR;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "peenform_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PEENFORM_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

std::string data(const char* name) { return (kData / name).string(); }

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST_CASE("grid option parsing") {
  CHECK(cli::parse_grid("41x41").n1 == 41);
  CHECK(cli::parse_grid("3X7").n2 == 7);
  CHECK_THROWS_AS(cli::parse_grid("1x5"), InputError);
  CHECK_THROWS_AS(cli::parse_grid("5"), InputError);
  CHECK_THROWS_AS(cli::parse_grid("5x5x5"), InputError);
  const auto axis = cli::axis_samples(8.0, 5);
  CHECK(axis == std::vector<double>{0, 2, 4, 6, 8});
}

TEST_CASE("calibrate") {
  const fs::path out = fresh_dir("calibrate");
  const fs::path one = out / "one.csv", two = out / "two.csv", empty = out / "empty.csv";
  write(one, "intensity,measured_height\n0.0101,0.304666666666666667\n");
  write(two, "intensity,measured_height\n0.0101,0.304666666666666667\n0.0101,0.304666666666666667\n");
  write(empty, "");
  REQUIRE(run_cli("calibrate --measurements " + one.string() + " --coupon " + data("nominal_plate.json") + " --out " +
              (out / "a").string()) == 0);
  const double k1 = load(out / "a" / "calibration.json")["slope_K"];
  CHECK(k1 == Approx(1.746e-4).epsilon(2e-3));
  REQUIRE(run_cli("calibrate --measurements " + two.string() + " --coupon " + data("nominal_plate.json") + " --out " +
              (out / "b").string()) == 0);
  CHECK(load(out / "b" / "calibration.json")["slope_K"].get<double>() == Approx(k1).epsilon(1e-15));
  CHECK(run_cli("calibrate --measurements " + empty.string() + " --coupon " + data("nominal_plate.json") + " --out " +
            (out / "c").string()) == 2);
  CHECK_FALSE(fs::exists(out / "c" / "calibration.json"));
  // the table of all nine readings agrees with a recipe that inlines them
  REQUIRE(run_cli("calibrate --measurements " + data("coupon_measurements.csv") + " --coupon " +
              data("nominal_plate.json") + " --out " + (out / "d").string()) == 0);
  CHECK(load(out / "d" / "calibration.json")["slope_K"].get<double>() == Approx(k1).epsilon(1e-12));
}

TEST_CASE("forward") {
  const fs::path out = fresh_dir("forward");
  REQUIRE(run_cli("forward --recipe " + data("uniform_recipe.json") + " --grid 5x5 --out " + out.string()) == 0);
  const json s = load(out / "forward_summary.json");
  CHECK(s["predicted_measured_height"].get<double>() == Approx(0.305).epsilon(0.01));
  CHECK(std::abs(s["corners"]["xL_yL"].get<double>()) < 1e-12);
  const std::string csv = slurp(out / "displacement.csv");
  CHECK(csv.rfind("x1_in,x2_in,u3_in\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 26);
  CHECK(csv.find('\r') == std::string::npos);

  json zero = load(kData / "uniform_recipe.json");
  zero["intensity"]["base"] = 0.0;
  write(out / "zero.json", zero.dump());
  REQUIRE(run_cli("forward --recipe " + (out / "zero.json").string() + " --grid 3x3 --out " + (out / "z").string()) == 0);
  const json zs = load(out / "z" / "forward_summary.json");
  CHECK(zs["center_displacement"].get<double>() == 0.0);
  CHECK(zs["predicted_measured_height"].get<double>() == 0.123);
  CHECK(slurp(out / "z" / "displacement.csv").find(",0\n") != std::string::npos);

  REQUIRE(run_cli("forward --recipe " + data("config2_recipe.json") + " --out " + (out / "c2").string()) == 0);
  const double c2 = load(out / "c2" / "forward_summary.json")["predicted_measured_height"];
  CHECK(c2 > 0.19);
  CHECK(c2 < 0.21);

  json bad = zero;
  bad["basis_n"] = 20;
  write(out / "bad.json", bad.dump());
  CHECK(run_cli("forward --recipe " + (out / "bad.json").string() + " --out " + (out / "bad").string()) == 2);
  CHECK_FALSE(fs::exists(out / "bad" / "forward_summary.json"));
  CHECK(run_cli("forward --recipe " + data("uniform_recipe.json") + " --grid 1x9 --out " + (out / "g").string()) == 2);
  CHECK(run_cli("forward --out " + out.string()) == 2);  // missing --recipe
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("strict mode") {
  const fs::path out = fresh_dir("strict");
  json r = load(kData / "uniform_recipe.json");
  r["comment"] = "hello";
  write(out / "r.json", r.dump());
  CHECK(run_cli("forward --recipe " + (out / "r.json").string() + " --grid 3x3 --out " + (out / "a").string()) == 0);
  CHECK(run_cli("forward --strict --recipe " + (out / "r.json").string() + " --grid 3x3 --out " + (out / "b").string()) == 2);
}

TEST_CASE("inverse") {
  const fs::path out = fresh_dir("inverse");
  REQUIRE(run_cli("inverse --recipe " + data("inverse_recipe.json") + " --constraints " + data("center_rise_constraints.json") +
              " --out " + out.string()) == 0);
  const json r = load(out / "inverse_result.json");
  const double mean = r["interior"]["mean"];
  CHECK(mean == Approx(0.050 * 0.0101 / 0.182).epsilon(0.01));
  CHECK(r["interior"]["relative_spread"].get<double>() < 0.1);
  CHECK(r["coefficients"].size() == 81);

  json twice = load(kData / "center_rise_constraints.json");
  for (auto& c : twice["constraints"]) c["u3"] = 2 * c["u3"].get<double>();
  write(out / "twice.json", twice.dump());
  REQUIRE(run_cli("inverse --recipe " + data("inverse_recipe.json") + " --constraints " + (out / "twice.json").string() +
              " --out " + (out / "x2").string()) == 0);
  CHECK(load(out / "x2" / "inverse_result.json")["interior"]["mean"].get<double>() == Approx(2 * mean).epsilon(1e-12));

  json zero = twice;
  for (auto& c : zero["constraints"]) c["u3"] = 0.0;
  write(out / "zero.json", zero.dump());
  REQUIRE(run_cli("inverse --recipe " + data("inverse_recipe.json") + " --constraints " + (out / "zero.json").string() +
              " --grid 4x4 --out " + (out / "z").string()) == 0);
  const std::string csv = slurp(out / "z" / "intensity.csv");
  CHECK(csv.find("e-") == std::string::npos);  // all samples print as 0

  json dup = load(kData / "center_rise_constraints.json");
  dup["constraints"].push_back(dup["constraints"][1]);
  write(out / "dup.json", dup.dump());
  CHECK(run_cli("inverse --recipe " + data("inverse_recipe.json") + " --constraints " + (out / "dup.json").string() +
            " --out " + (out / "d").string()) == 2);
}

TEST_CASE("montecarlo") {
  const fs::path out = fresh_dir("mc");
  const std::string base = "montecarlo --recipe " + data("config2_recipe.json") + " --uncertainty " +
                           data("uncertainty.json") + " --seed 11 ";
  REQUIRE(run_cli(base + "--out " + (out / "a").string()) == 0);
  REQUIRE(run_cli(base + "--workers 3 --out " + (out / "b").string()) == 0);
  const json s = load(out / "a" / "mc_summary.json");
  CHECK(s["samples"].size() == 250);
  CHECK(s["seed"] == 11);
  CHECK(slurp(out / "a" / "mc_summary.json") == slurp(out / "b" / "mc_summary.json"));
  CHECK(slurp(out / "a" / "mc_samples.csv") == slurp(out / "b" / "mc_samples.csv"));
  REQUIRE(run_cli(base + "--trials 12 --out " + (out / "c").string()) == 0);
  CHECK(load(out / "c" / "mc_summary.json")["samples"].size() == 12);

  json flat = load(kData / "uncertainty.json");
  for (const char* k : {"L1", "L2", "h", "mask_offset", "measurement_noise", "M"}) flat[k][1] = flat[k][0];
  write(out / "flat.json", flat.dump());
  REQUIRE(run_cli("montecarlo --recipe " + data("config2_recipe.json") + " --uncertainty " + (out / "flat.json").string() +
              " --trials 5 --out " + (out / "f").string()) == 0);
  CHECK(load(out / "f" / "mc_summary.json")["std"].get<double>() == 0.0);

  json mixed = load(kData / "uncertainty.json");
  mixed["units"]["length"] = "mm";
  write(out / "mixed.json", mixed.dump());
  CHECK(run_cli("montecarlo --recipe " + data("config2_recipe.json") + " --uncertainty " + (out / "mixed.json").string() +
            " --out " + (out / "m").string()) == 2);
  CHECK(run_cli(base + "--trials 0 --out " + (out / "t").string()) == 2);
}

TEST_CASE("convergence") {
  const fs::path out = fresh_dir("convergence");
  REQUIRE(run_cli("convergence --recipe " + data("uniform_recipe.json") + " --out " + out.string()) == 0);
  std::istringstream rows(slurp(out / "convergence.csv"));
  std::string line;
  std::getline(rows, line);
  CHECK(line == "N,center_u3,max_abs_change,l2_change,relative_center_change");
  int count = 0;
  while (std::getline(rows, line)) {
    ++count;
    if (count == 1) continue;
    double n, center, dmax, dl2, rel;
    char c;
    std::istringstream f(line);
    f >> n >> c >> center >> c >> dmax >> c >> dl2 >> c >> rel;
    CHECK(dmax < 1e-14);
    CHECK(rel < 1e-13);
  }
  CHECK(count == 11);

  REQUIRE(run_cli("convergence --recipe " + data("config2_recipe.json") + " --n-min 9 --n-max 13 --out " +
              (out / "c2").string()) == 0);
  std::istringstream c2(slurp(out / "c2" / "convergence.csv"));
  std::getline(c2, line);
  std::getline(c2, line);
  const double c9 = std::stod(line.substr(line.find(',') + 1));
  std::string last;
  while (std::getline(c2, line)) last = line;
  const double c13 = std::stod(last.substr(last.find(',') + 1));
  CHECK(std::abs(c13 - c9) < 0.01 * std::abs(c13));

  CHECK(run_cli("convergence --recipe " + data("uniform_recipe.json") + " --n-min 5 --n-max 5 --out " +
            (out / "bad").string()) == 2);
  CHECK(run_cli("convergence --recipe " + data("uniform_recipe.json") + " --n-min 1 --n-max 5 --out " +
            (out / "bad").string()) == 2);
}

TEST_CASE("anova") {
  const fs::path out = fresh_dir("anova");
  REQUIRE(run_cli("anova --table " + data("uniform_plate_heights.csv") + " --level 0.10 --out " + out.string()) == 0);
  const json r = load(out / "anova.json");
  CHECK(std::abs(r["F_rows"].get<double>() - 4.557) < 1e-3);
  CHECK(r["significant_rows"] == true);
  CHECK(r["significant_cols"] == false);
  write(out / "flat.csv", "0.3,0.3,0.3\n0.3,0.3,0.3\n0.3,0.3,0.3\n");
  CHECK(run_cli("anova --table " + (out / "flat.csv").string() + " --out " + (out / "f").string()) == 3);
  CHECK_FALSE(fs::exists(out / "f" / "anova.json"));
  CHECK(run_cli("anova --table " + data("uniform_plate_heights.csv") + " --level 2 --out " + (out / "l").string()) == 2);
}

TEST_CASE("temperature") {
  const fs::path out = fresh_dir("temperature");
  REQUIRE(run_cli("temperature --recipe " + data("temperature_recipe.json") + " --grid 3x3 --out " + out.string()) == 0);
  std::istringstream rows(slurp(out / "temperature.csv"));
  std::string line;
  std::getline(rows, line);
  double first = 0.0;
  while (std::getline(rows, line)) {
    first = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(first == Approx(1.1375e-2).epsilon(1e-4));
  }

  json twice = load(kData / "temperature_recipe.json");
  twice["plate"]["alpha"] = 2.0;
  write(out / "twice.json", twice.dump());
  REQUIRE(run_cli("temperature --recipe " + (out / "twice.json").string() + " --grid 2x2 --out " + (out / "a2").string()) == 0);
  const std::string a2 = slurp(out / "a2" / "temperature.csv");
  CHECK(std::stod(a2.substr(a2.rfind(',') + 1)) == Approx(first / 2).epsilon(1e-14));

  json zero = twice;
  zero["intensity"]["base"] = 0.0;
  write(out / "zero.json", zero.dump());
  REQUIRE(run_cli("temperature --recipe " + (out / "zero.json").string() + " --grid 2x2 --out " + (out / "z").string()) == 0);
  CHECK(slurp(out / "z" / "temperature.csv") == "x1_in,x2_in,T0_per_in\n0,0,0\n0,8,0\n8,0,0\n8,8,0\n");

  CHECK(run_cli("temperature --recipe " + data("uniform_recipe.json") + " --out " + (out / "noalpha").string()) == 2);
}

TEST_CASE("reruns are byte-identical") {
  const fs::path out = fresh_dir("rerun");
  for (const char* dir : {"a", "b"}) {
    const std::string o = " --out " + (out / dir).string();
    REQUIRE(run_cli("forward --recipe " + data("config3_recipe.json") + o) == 0);
    REQUIRE(run_cli("inverse --recipe " + data("inverse_recipe.json") + " --constraints " + data("center_rise_constraints.json") + o) == 0);
    REQUIRE(run_cli("convergence --recipe " + data("config4_recipe.json") + o) == 0);
    REQUIRE(run_cli("anova --table " + data("uniform_plate_heights.csv") + o) == 0);
  }
  for (const auto& entry : fs::directory_iterator(out / "a")) {
    const fs::path other = out / "b" / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
    CHECK(entry.path().filename().string().find(".tmp") == std::string::npos);
  }
}

TEST_CASE("atomic writes") {
  const fs::path out = fresh_dir("atomic");
  cli::write_outputs(out / "nested", {{"a.txt", "one\n"}, {"b.txt", "two\n"}});
  CHECK(slurp(out / "nested" / "a.txt") == "one\n");
  cli::write_outputs(out / "nested", {{"a.txt", "three\n"}});
  CHECK(slurp(out / "nested" / "a.txt") == "three\n");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(out / "nested")) ++files;
  CHECK(files == 2);
}

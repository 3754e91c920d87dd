#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <random>
#include <set>

#include "peenform/error.hpp"
#include "peenform/uq.hpp"
#include "support.hpp"

using namespace peenform;
using doctest::Approx;
using testing::nominal_plate;

namespace {

UncertaintySpec degenerate_spec() {
  UncertaintySpec s;
  s.L1 = s.L2 = {8.0, 8.0};
  s.h = {0.123, 0.123};
  s.mask_offset = {0.0, 0.0};
  s.measurement_noise = {0.0, 0.0};
  s.M = {0.305, 0.305};
  return s;
}

McRecipe cross_recipe(int n = 9) {
  McRecipe r;
  r.plate = nominal_plate();
  r.basis_n = n;
  r.map.base_intensity = 0.0101;
  r.map.masked_regions = {{3, 5, 0, 8}, {0, 8, 3, 5}};
  return r;
}

Eigen::MatrixXd uniform_heights() {
  Eigen::MatrixXd t(3, 3);
  t << 0.311, 0.302, 0.311, 0.301, 0.300, 0.300, 0.304, 0.306, 0.307;
  return t;
}

}  // namespace

TEST_CASE("uncertainty spec validation") {
  CHECK_NOTHROW(UncertaintySpec{}.validate());
  UncertaintySpec s;
  s.M = {0.311, 0.302};
  CHECK_THROWS_AS(s.validate(), InputError);
  s = {};
  s.trial_count = 0;
  CHECK_THROWS_AS(s.validate(), InputError);
  s = {};
  s.h = {0.0, 0.1};
  CHECK_THROWS_AS(s.validate(), InputError);
  s = {};
  s.calibration_intensity = 0.0;
  CHECK_THROWS_AS(s.validate(), InputError);
}

TEST_CASE("trial streams") {
  TrialStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  const Range r{2.0, 5.0};
  for (int k = 0; k < 9; ++k) {
    const double x = a.uniform(r);
    CHECK(x == b.uniform(r));
    CHECK(x >= 2.0);
    CHECK(x < 5.0);
    CHECK(x != c.uniform(r));
    CHECK(x != d.uniform(r));
  }
  TrialStream e(1, 1);
  CHECK(e.uniform({3.0, 3.0}) == 3.0);
}

TEST_CASE("latin hypercube stratification") {
  for (int n : {1, 5, 10, 11, 250}) {
    const StratumPlan plan(99, n);
    for (int d = 0; d < kTrialDimensions; ++d) {
      std::set<int> seen;
      for (int t = 0; t < n; ++t) seen.insert(plan.stratum(d, t));
      CHECK(static_cast<int>(seen.size()) == n);
      CHECK(*seen.begin() == 0);
      CHECK(*seen.rbegin() == n - 1);
    }
    for (int t = 0; t < n; ++t) {
      TrialStream s(99, t, &plan);
      for (int d = 0; d < kTrialDimensions; ++d) {
        const double u = s.uniform({0.0, 1.0});
        CHECK(u >= static_cast<double>(plan.stratum(d, t)) / n);
        CHECK(u < static_cast<double>(plan.stratum(d, t) + 1) / n);
      }
      CHECK_THROWS_AS(s.uniform({0.0, 1.0}), InputError);
    }
  }
  const StratumPlan plan(1, 4);
  CHECK_THROWS_AS(TrialStream(1, 4, &plan), InputError);
}

TEST_CASE("decorrelated plans have small rank correlation") {
  const int n = 250;
  const StratumPlan plan(3, n);
  double worst = 0.0;
  for (int a = 0; a < kTrialDimensions; ++a)
    for (int b = a + 1; b < kTrialDimensions; ++b) {
      double num = 0.0, den = 0.0;
      for (int t = 0; t < n; ++t) {
        const double x = plan.stratum(a, t) - 0.5 * (n - 1), y = plan.stratum(b, t) - 0.5 * (n - 1);
        num += x * y;
        den += x * x;
      }
      worst = std::max(worst, std::abs(num / den));
    }
  CHECK(worst < 0.05);
}

TEST_CASE("trial closure and determinism") {
  const UncertaintySpec s = degenerate_spec();
  McRecipe uniform = cross_recipe();
  uniform.map.masked_regions.clear();
  TrialStream stream(0, 0);
  CHECK(uq::run_trial(s, uniform, stream) == Approx(0.305).epsilon(1e-12));

  TrialStream a(5, 1), b(5, 1);
  const McRecipe cross = cross_recipe();
  const double first = uq::run_trial(s, cross, a);
  CHECK(first == uq::run_trial(s, cross, b));
  CHECK(first > 0.19);
  CHECK(first < 0.21);
}

TEST_CASE("monte carlo summaries") {
  UncertaintySpec s;
  s.trial_count = 1;
  const McSummary one = uq::run_monte_carlo(s, cross_recipe(5));
  CHECK(one.samples.size() == 1);
  CHECK(one.std == 0.0);
  CHECK(one.mean == one.samples[0]);

  UncertaintySpec flat = degenerate_spec();
  flat.trial_count = 20;
  const McSummary f = uq::run_monte_carlo(flat, cross_recipe(5));
  CHECK(f.std == 0.0);
  CHECK(f.histogram.counts.size() == 1);
  CHECK(f.histogram.counts[0] == 20);

  s.trial_count = 60;
  for (Sampling mode : {Sampling::latin_hypercube, Sampling::independent}) {
    s.sampling = mode;
    s.seed = 17;
    const McSummary x = uq::run_monte_carlo(s, cross_recipe(5), 1);
    const McSummary y = uq::run_monte_carlo(s, cross_recipe(5), 1);
    const McSummary z = uq::run_monte_carlo(s, cross_recipe(5), 4);
    CHECK(x.samples == y.samples);
    CHECK(x.samples == z.samples);
    CHECK(x.mean == z.mean);
    s.seed = 18;
    CHECK(uq::run_monte_carlo(s, cross_recipe(5), 1).samples != x.samples);
    int total = 0;
    for (int c : x.histogram.counts) total += c;
    CHECK(total == 60);
    CHECK(x.histogram.edges.front() == *std::min_element(x.samples.begin(), x.samples.end()));
    CHECK(x.histogram.edges.back() == *std::max_element(x.samples.begin(), x.samples.end()));
  }
  CHECK_THROWS_AS(uq::summarize({}), InputError);
}

TEST_CASE("output spread follows the measured-height range") {
  UncertaintySpec s = degenerate_spec();
  McRecipe uniform = cross_recipe(5);
  uniform.map.masked_regions.clear();
  const auto at = [&](double m) {
    UncertaintySpec e = s;
    e.M = {m, m};
    TrialStream st(0, 0);
    return uq::run_trial(e, uniform, st);
  };
  const double lo = at(0.302), hi = at(0.311);
  CHECK(lo < hi);
  s.M = {0.302, 0.311};
  s.trial_count = 200;
  const McSummary r = uq::run_monte_carlo(s, uniform);
  const auto [mn, mx] = std::minmax_element(r.samples.begin(), r.samples.end());
  CHECK(*mn >= lo - 1e-15);
  CHECK(*mx <= hi + 1e-15);
  CHECK(*mx - *mn > 0.98 * (hi - lo));  // stratified draws reach both ends
}

TEST_CASE("F survival function against direct integration of the density") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> df(0.5, 30.0), fv(0.01, 20.0);
  boost::math::quadrature::exp_sinh<double> tail;
  for (int k = 0; k < 200; ++k) {
    const double d1 = df(rng), d2 = df(rng), f = fv(rng);
    const double log_norm = 0.5 * d1 * std::log(d1 / d2) + std::lgamma(0.5 * (d1 + d2)) -
                            std::lgamma(0.5 * d1) - std::lgamma(0.5 * d2);
    const auto pdf = [&](double t) {
      const double x = f + t;
      return std::exp(log_norm + (0.5 * d1 - 1) * std::log(x) -
                      0.5 * (d1 + d2) * std::log1p(d1 * x / d2));
    };
    const double ref = tail.integrate(pdf, 1e-13);
    CHECK(std::abs(uq::f_survival(f, d1, d2) - ref) < 1e-8);
  }
  // closed form for (2, 4) degrees of freedom: (1 + F/2)^-2
  for (double f : {0.1, 0.918, 4.557, 10.0}) CHECK(uq::f_survival(f, 2, 4) == Approx(std::pow(1 + f / 2, -2)).epsilon(1e-10));
  CHECK(uq::f_survival(0.0, 2, 4) == 1.0);
  CHECK_THROWS_AS(uq::f_survival(1.0, 0.0, 4), InputError);
}

TEST_CASE("critical value bisection on the implemented survival function") {
  double lo = 0.0, hi = 100.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (uq::f_survival(mid, 2, 4) > 0.10 ? lo : hi) = mid;
  }
  CHECK(std::abs(uq::f_survival(lo, 2, 4) - 0.10) < 1e-4);
  CHECK(lo == Approx(4.32456).epsilon(1e-5));  // 2 (sqrt(10) - 1)
}

TEST_CASE("anova on the uniform-plate measurements") {
  const AnovaResult r = uq::anova_two_way_no_replication(uniform_heights(), 0.10);
  CHECK(r.ss_rows == Approx(9.2667e-5).epsilon(1e-4));
  CHECK(r.ss_cols == Approx(1.8667e-5).epsilon(1e-4));
  CHECK(r.ss_error == Approx(4.0667e-5).epsilon(1e-4));
  CHECK(std::abs(r.F_rows - 4.557) < 1e-3);
  CHECK(std::abs(r.F_cols - 0.918) < 1e-3);
  CHECK(r.df_rows == 2);
  CHECK(r.df_cols == 2);
  CHECK(r.df_error == 4);
  CHECK(r.p_rows == Approx(std::pow(1 + r.F_rows / 2, -2)).epsilon(1e-10));
  CHECK(r.significant_rows);
  CHECK_FALSE(r.significant_cols);
  CHECK_FALSE(uq::anova_two_way_no_replication(uniform_heights(), 0.05).significant_rows);
}

TEST_CASE("anova invariants and errors") {
  // identical rows leave no residual, so F is undefined
  Eigen::MatrixXd same_rows(3, 3);
  same_rows << 1, 2, 4, 1, 2, 4, 1, 2, 4;
  CHECK_THROWS_AS(uq::anova_two_way_no_replication(same_rows, 0.1), NumericalError);
  // equal row means with a residual: no row effect at all
  Eigen::MatrixXd latin(3, 3);
  latin << 1, 2, 3, 2, 3, 1, 3, 1, 2;
  const AnovaResult r = uq::anova_two_way_no_replication(latin, 0.1);
  CHECK(r.F_rows == Approx(0.0).scale(1.0));
  CHECK(r.p_rows == Approx(1.0));

  const AnovaResult shifted = uq::anova_two_way_no_replication(uniform_heights().array() + 3.0, 0.1);
  const AnovaResult base = uq::anova_two_way_no_replication(uniform_heights(), 0.1);
  CHECK(shifted.F_rows == Approx(base.F_rows).epsilon(1e-6));
  CHECK(shifted.F_cols == Approx(base.F_cols).epsilon(1e-6));

  std::mt19937_64 rng(41);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<int> size(2, 6);
  for (int k = 0; k < 100; ++k) {
    Eigen::MatrixXd t(size(rng), size(rng));
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = z(rng);
    const AnovaResult a = uq::anova_two_way_no_replication(t, 0.1);
    CHECK(a.ss_rows + a.ss_cols + a.ss_error == Approx(a.ss_total).epsilon(1e-12));
  }

  CHECK_THROWS_AS(uq::anova_two_way_no_replication(Eigen::MatrixXd::Constant(3, 3, 0.3), 0.1), NumericalError);
  Eigen::MatrixXd additive(2, 3);
  additive << 1, 2, 3, 2, 3, 4;
  CHECK_THROWS_AS(uq::anova_two_way_no_replication(additive, 0.1), NumericalError);
  CHECK_THROWS_AS(uq::anova_two_way_no_replication(Eigen::MatrixXd::Ones(1, 3), 0.1), InputError);
  CHECK_THROWS_AS(uq::anova_two_way_no_replication(uniform_heights(), 1.5), InputError);
}

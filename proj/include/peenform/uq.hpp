#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "peenform/model.hpp"

namespace peenform {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Uniform input ranges for the Monte Carlo study. The coupon used to
/// calibrate and the plate being predicted draw from the same L1/L2/h ranges
/// but independently.
enum class Sampling {
  /// Every draw is an independent uniform variate.
  independent,
  /// Each input dimension is split into trial_count equal strata and every
  /// stratum is used by exactly one trial (stratum assignment is a seeded
  /// permutation per dimension; the position inside the stratum comes from the
  /// trial's own stream).
  latin_hypercube,
};

struct UncertaintySpec {
  Range L1{7.975, 8.025};
  Range L2{7.975, 8.025};
  Range h{0.1215, 0.1245};
  Range mask_offset{-0.050, 0.050};
  Range measurement_noise{-0.001, 0.001};
  Range M{0.302, 0.311};
  double calibration_intensity = 0.0101;
  int trial_count = 250;
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::latin_hypercube;

  void validate() const;
};

/// What is being predicted: a masking layout on a nominal plate material,
/// solved with an N x N basis.
struct McRecipe {
  IntensityMap map;
  PlateSpec plate;  // E and v are used; dimensions come from the sampled ranges
  int basis_n = 9;
};

/// Number of uniform draws one trial makes (see run_trial for the order).
inline constexpr int kTrialDimensions = 9;

/// Per-dimension stratum permutations for Latin hypercube sampling; a pure
/// function of (seed, trial_count).
class StratumPlan {
 public:
  StratumPlan(std::uint64_t seed, int trial_count);

  int trial_count() const { return trial_count_; }
  int stratum(int dimension, int trial) const { return perms_[dimension][trial]; }

 private:
  int trial_count_;
  std::vector<std::vector<int>> perms_;
};

/// Random stream of one trial; a pure function of (seed, trial index) and,
/// when stratified, of the plan.
class TrialStream {
 public:
  TrialStream(std::uint64_t seed, std::uint64_t trial, const StratumPlan* plan = nullptr);

  /// lo + (hi - lo) * u, u in [0, 1); exactly lo for a degenerate range.
  double uniform(const Range& r);

 private:
  double unit();

  std::mt19937_64 engine_;
  const StratumPlan* plan_;
  int trial_;
  int dimension_ = 0;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<int> counts;
};

struct McSummary {
  std::vector<double> samples;  // by trial index
  double mean = 0.0;
  double std = 0.0;             // sample standard deviation; 0 for one trial
  Histogram histogram;
};

struct AnovaResult {
  double F_rows = 0.0;
  double F_cols = 0.0;
  int df_rows = 0;
  int df_cols = 0;
  int df_error = 0;
  double p_rows = 1.0;
  double p_cols = 1.0;
  double ss_rows = 0.0;
  double ss_cols = 0.0;
  double ss_error = 0.0;
  double ss_total = 0.0;
  double level = 0.1;
  bool significant_rows = false;
  bool significant_cols = false;
};

namespace uq {

/// One Monte Carlo trial, drawing in this fixed order: coupon L1, L2, h;
/// measured height M; plate L1, L2, h; mask offset; measurement noise.
/// Calibrates K from the coupon (u_max = M - h_coupon), predicts the plate
/// center displacement and returns it plus the plate thickness and noise,
/// i.e. a predicted height-gauge reading.
double run_trial(const UncertaintySpec& spec, const McRecipe& recipe, TrialStream& stream);

/// trial_count trials; trial i uses TrialStream(seed, i[, plan]), so the
/// samples do not depend on `workers`.
McSummary run_monte_carlo(const UncertaintySpec& spec, const McRecipe& recipe, int workers = 1);

McSummary summarize(std::vector<double> samples);

/// Freedman-Diaconis bins; a single bin when the spread or IQR is zero.
Histogram freedman_diaconis(const std::vector<double>& samples);

/// P(X > f) for X ~ F(d1, d2), integrating the density numerically
/// (adaptive Gauss-Kronrod, 1e-8 absolute tolerance or better).
double f_survival(double f, double d1, double d2);

/// Two-way ANOVA without replication: rows and columns are the two factors,
/// one observation per cell. Throws NumericalError when the residual mean
/// square vanishes.
AnovaResult anova_two_way_no_replication(const Eigen::MatrixXd& table, double level);

}  // namespace uq
}  // namespace peenform

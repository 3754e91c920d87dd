#include "peenform/uq.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <thread>

#include "peenform/assembly.hpp"
#include "peenform/calibration.hpp"
#include "peenform/error.hpp"

namespace peenform {

void UncertaintySpec::validate() const {
  const auto check = [](const Range& r, const char* name) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi)
      throw InputError(std::string("uncertainty range ") + name + " must satisfy lo <= hi");
  };
  check(L1, "L1");
  check(L2, "L2");
  check(h, "h");
  check(mask_offset, "mask_offset");
  check(measurement_noise, "measurement_noise");
  check(M, "M");
  if (!(L1.lo > 0.0 && L2.lo > 0.0 && h.lo > 0.0))
    throw InputError("uncertainty ranges for L1, L2 and h must be positive");
  if (!(calibration_intensity > 0.0)) throw InputError("calibration intensity must be positive");
  if (trial_count < 1) throw InputError("trial_count must be at least 1");
}

namespace {

// Stream tag keeping the permutation engines disjoint from trial streams.
constexpr std::uint32_t kPlanTag = 0x9e3779b9u;
constexpr int kDecorrelationSweeps = 4;

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t index, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), tag};
  return std::mt19937_64(seq);
}

double unit_from(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace

StratumPlan::StratumPlan(std::uint64_t seed, int trial_count) : trial_count_(trial_count) {
  if (trial_count < 1) throw InputError("trial_count must be at least 1");
  const int n = trial_count;
  perms_.resize(kTrialDimensions);
  for (int d = 0; d < kTrialDimensions; ++d) {
    auto engine = seeded_engine(seed, static_cast<std::uint64_t>(d), kPlanTag);
    auto& perm = perms_[d];
    perm.resize(n);
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates spelled out: std::shuffle's draw pattern is unspecified.
    for (int k = n - 1; k > 0; --k)
      std::swap(perm[k], perm[engine() % static_cast<std::uint64_t>(k + 1)]);
  }
  if (n <= kTrialDimensions + 1) return;

  // Iman-Conover: push the rank correlation between dimensions towards zero
  // by whitening the centered-rank scores and re-ranking.
  for (int sweep = 0; sweep < kDecorrelationSweeps; ++sweep) {
    Eigen::MatrixXd scores(n, kTrialDimensions);
    for (int d = 0; d < kTrialDimensions; ++d)
      for (int i = 0; i < n; ++i) scores(i, d) = perms_[d][i] - 0.5 * (n - 1);
    const Eigen::MatrixXd corr = (scores.transpose() * scores) / scores.col(0).squaredNorm();
    const Eigen::LLT<Eigen::MatrixXd> llt(corr);
    if (llt.info() != Eigen::Success) break;
    const Eigen::MatrixXd white =
        llt.matrixL().solve(scores.transpose()).transpose();
    for (int d = 0; d < kTrialDimensions; ++d) {
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return white(a, d) < white(b, d); });
      for (int rank = 0; rank < n; ++rank) perms_[d][order[rank]] = rank;
    }
  }
}

TrialStream::TrialStream(std::uint64_t seed, std::uint64_t trial, const StratumPlan* plan)
    : engine_(seeded_engine(seed, trial, 0)), plan_(plan), trial_(static_cast<int>(trial)) {
  if (plan_ && (trial_ < 0 || trial_ >= plan_->trial_count()))
    throw InputError("trial index outside the stratum plan");
}

double TrialStream::unit() {
  const double jitter = unit_from(engine_);
  if (!plan_) return jitter;
  if (dimension_ >= kTrialDimensions) throw InputError("trial drew more dimensions than planned");
  const double u = (plan_->stratum(dimension_++, trial_) + jitter) / plan_->trial_count();
  return std::min(u, std::nextafter(1.0, 0.0));
}

double TrialStream::uniform(const Range& r) {
  const double u = unit();
  return r.lo + (r.hi - r.lo) * u;
}

namespace uq {

double run_trial(const UncertaintySpec& spec, const McRecipe& recipe, TrialStream& stream) {
  PlateSpec coupon = recipe.plate;
  coupon.L1 = stream.uniform(spec.L1);
  coupon.L2 = stream.uniform(spec.L2);
  coupon.h = stream.uniform(spec.h);
  const double measured = stream.uniform(spec.M);

  PlateSpec plate = recipe.plate;
  plate.L1 = stream.uniform(spec.L1);
  plate.L2 = stream.uniform(spec.L2);
  plate.h = stream.uniform(spec.h);
  const double offset = stream.uniform(spec.mask_offset);
  const double noise = stream.uniform(spec.measurement_noise);

  const double u_max = measured - coupon.h;
  CalibrationRecord record;
  record.intensity = spec.calibration_intensity;
  record.u_max = u_max;
  record.tau = calibration::moment_from_max_displacement(u_max, coupon.h, coupon.L1, coupon.L2);
  CalibrationModel cal;
  cal.coupon = coupon;
  cal.slope_K = record.tau / record.intensity;
  cal.records.push_back(record);

  const TensorBasis basis(recipe.basis_n, plate);
  const IntensityMap map = recipe.map.with_mask_offset(offset).clipped(plate);
  const MomentField tau = model::project_moment(basis, map, cal);
  const SaddleSolution sol = PlateSystem(basis).solve(tau);
  const double center = model::eval_displacement(basis, sol.a, {0.5 * plate.L1, 0.5 * plate.L2});
  return center + plate.h + noise;
}

McSummary run_monte_carlo(const UncertaintySpec& spec, const McRecipe& recipe, int workers) {
  spec.validate();
  recipe.map.validate();
  const int count = spec.trial_count;
  std::optional<StratumPlan> plan;
  if (spec.sampling == Sampling::latin_hypercube) plan.emplace(spec.seed, count);
  const StratumPlan* plan_ptr = plan ? &*plan : nullptr;
  std::vector<double> samples(count, 0.0);
  const int threads = std::clamp(workers, 1, count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) {
      TrialStream stream(spec.seed, static_cast<std::uint64_t>(i), plan_ptr);
      samples[i] = run_trial(spec, recipe, stream);
    }
    return summarize(std::move(samples));
  }

  std::atomic<int> next{0};
  std::vector<std::exception_ptr> failures(threads);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (int i = next++; i < count; i = next++) {
            TrialStream stream(spec.seed, static_cast<std::uint64_t>(i), plan_ptr);
            samples[i] = run_trial(spec, recipe, stream);
          }
        } catch (...) {
          failures[w] = std::current_exception();
          next = count;
        }
      });
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return summarize(std::move(samples));
}

McSummary summarize(std::vector<double> samples) {
  if (samples.empty()) throw InputError("cannot summarize an empty sample set");
  McSummary s;
  const double n = static_cast<double>(samples.size());
  // shifted by the first sample so a constant set gives exactly zero spread
  const double x0 = samples.front();
  double shift = 0.0;
  for (double x : samples) shift += x - x0;
  shift /= n;
  s.mean = x0 + shift;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double x : samples) ss += (x - x0 - shift) * (x - x0 - shift);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  s.histogram = freedman_diaconis(samples);
  s.samples = std::move(samples);
  return s;
}

Histogram freedman_diaconis(const std::vector<double>& samples) {
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  const auto quantile = [&](double q) {
    const double pos = q * (sorted.size() - 1);
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - k;
    return k + 1 < sorted.size() ? sorted[k] + frac * (sorted[k + 1] - sorted[k]) : sorted[k];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  const double width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
  int bins = 1;
  if (hi > lo && width > 0.0) bins = std::clamp(static_cast<int>(std::ceil((hi - lo) / width)), 1, 1000);

  Histogram h;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.edges[b] = lo + (hi - lo) * b / bins;
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double x : sorted) {
    int b = hi > lo ? static_cast<int>((x - lo) / (hi - lo) * bins) : 0;
    h.counts[std::clamp(b, 0, bins - 1)] += 1;
  }
  return h;
}

double f_survival(double f, double d1, double d2) {
  if (!(d1 > 0.0 && d2 > 0.0)) throw InputError("F distribution needs positive degrees of freedom");
  if (!(f > 0.0)) return 1.0;
  if (std::isinf(f)) return 0.0;
  // P(F > f) = I_{1-z}(d2/2, d1/2) with z = d1 f / (d1 f + d2)
  const double z = d1 * f / (d1 * f + d2);
  return boost::math::ibetac(0.5 * d1, 0.5 * d2, z);
}

AnovaResult anova_two_way_no_replication(const Eigen::MatrixXd& table, double level) {
  const auto r = table.rows();
  const auto c = table.cols();
  if (r < 2 || c < 2) throw InputError("two-way ANOVA needs at least a 2x2 table");
  if (!table.allFinite()) throw InputError("ANOVA table has non-finite entries");
  if (!(level > 0.0 && level < 1.0)) throw InputError("significance level must lie in (0, 1)");

  const double grand = table.mean();
  const Eigen::VectorXd row_means = table.rowwise().mean();
  const Eigen::RowVectorXd col_means = table.colwise().mean();
  AnovaResult out;
  out.level = level;
  out.df_rows = static_cast<int>(r - 1);
  out.df_cols = static_cast<int>(c - 1);
  out.df_error = out.df_rows * out.df_cols;
  out.ss_rows = static_cast<double>(c) * (row_means.array() - grand).square().sum();
  out.ss_cols = static_cast<double>(r) * (col_means.array() - grand).square().sum();
  out.ss_total = (table.array() - grand).square().sum();
  double ss_error = 0.0;
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) {
      const double e = table(i, j) - row_means[i] - col_means[j] + grand;
      ss_error += e * e;
    }
  out.ss_error = ss_error;
  const double scale = std::max(out.ss_total, std::abs(grand) * std::abs(grand) * r * c);
  if (!(ss_error > 1e-24 * scale))
    throw NumericalError("degenerate ANOVA: the residual mean square is zero (the table is "
                         "exactly additive), so F statistics are undefined");
  const double ms_error = ss_error / out.df_error;
  out.F_rows = (out.ss_rows / out.df_rows) / ms_error;
  out.F_cols = (out.ss_cols / out.df_cols) / ms_error;
  out.p_rows = f_survival(out.F_rows, out.df_rows, out.df_error);
  out.p_cols = f_survival(out.F_cols, out.df_cols, out.df_error);
  out.significant_rows = out.p_rows < level;
  out.significant_cols = out.p_cols < level;
  return out;
}

}  // namespace uq
}  // namespace peenform

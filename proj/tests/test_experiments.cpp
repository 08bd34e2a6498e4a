#include "gslab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "gslab/special.hpp"

using namespace gslab;

namespace {

// Two-sided KS p-value of a sample against the standard normal.
double normal_ks_pvalue(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = normal_cdf(v[i]);
    d = std::max(d, std::max(std::abs(f - i / n), std::abs(f - (i + 1) / n)));
  }
  return kolmogorov_sf(std::sqrt(n) * d);
}

}  // namespace

TEST_CASE("turning estimate: validation and basic contract") {
  CHECK_THROWS_AS(estimate_turning(1, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(estimate_turning(5, 0, 1), std::invalid_argument);
  ExperimentOptions bad;
  bad.handoff_n = 0;
  CHECK_THROWS_AS(estimate_turning(5, 10, 1, bad), std::invalid_argument);

  ExperimentOptions exact;
  exact.mode = ChainMode::Exact;
  const EstimateResult r = estimate_turning(2, 2000, 11, exact);
  CHECK(r.label == "turning");
  CHECK(r.n_replicas == 2000);
  CHECK(r.point >= 0.0);
  CHECK(r.point <= 1.0);
  CHECK(r.std_error ==
        doctest::Approx(std::sqrt(r.point * (1.0 - r.point) / 2000.0))
            .epsilon(1e-12));
}

TEST_CASE("turning estimate: reversal frequency near 1/4, homogeneous in n") {
  const EstimateResult a = estimate_turning(10, 20000, 12);
  const EstimateResult b = estimate_turning(30, 20000, 13);
  const double sigma =
      std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
  CHECK(std::abs(a.point - b.point) <= 3.0 * sigma);
  CHECK(std::abs(a.point - kTurnProbability) <= 3.0 * a.std_error);
  CHECK(std::abs(b.point - kTurnProbability) <= 3.0 * b.std_error);
}

TEST_CASE("turning estimate: exact dynamics at step 8 stay in the pilot band") {
  ExperimentOptions exact;
  exact.mode = ChainMode::Exact;
  const EstimateResult r = estimate_turning(8, 4000, 14, exact);
  CHECK(r.point >= 0.20);
  CHECK(r.point <= 0.30);
}

TEST_CASE("turning estimate: deterministic and thread-count independent") {
  ExperimentOptions serial;
  ExperimentOptions parallel;
  parallel.threads = 3;
  const EstimateResult a = estimate_turning(6, 3000, 21, serial);
  const EstimateResult b = estimate_turning(6, 3000, 21, serial);
  const EstimateResult c = estimate_turning(6, 3000, 21, parallel);
  CHECK(a.point == b.point);
  CHECK(a.point == c.point);
  const EstimateResult d = estimate_turning(6, 3000, 22, serial);
  CHECK(a.point != d.point);  // different seed, 3000 Bernoulli draws
}

TEST_CASE("tau growth: log log tau_n / n approaches log 2") {
  const TauGrowthResult r = tau_growth_series(50, 300, 31);
  CHECK(r.series.label == "tau_growth");
  CHECK(r.series.reference == doctest::Approx(std::log(2.0)));
  REQUIRE(!r.series.points.empty());
  const SeriesPoint& last = r.series.points.back();
  CHECK(last.index == 50.0);
  CHECK(last.count == 300);
  CHECK(std::abs(last.value - std::log(2.0)) < 0.02);
  for (std::size_t i = 1; i < r.series.points.size(); ++i) {
    CHECK(r.series.points[i].index > r.series.points[i - 1].index);
  }
  REQUIRE(r.gamma_hat.size() == 300);
  for (double g : r.gamma_hat) CHECK(g > 0.0);
}

TEST_CASE("tau growth: normalized limit has settled by n = 40") {
  // Same seed: replica r of the n=40 run is the prefix of replica r of the
  // n=50 run, so the quartiles difference isolates the n=40..50 increments
  // of log tau / 2^n, which are geometrically small.
  const TauGrowthResult r50 = tau_growth_series(50, 400, 32);
  const TauGrowthResult r40 = tau_growth_series(40, 400, 32);
  const double iqr50 = sample_quantile(r50.gamma_hat, 0.75) -
                       sample_quantile(r50.gamma_hat, 0.25);
  const double iqr40 = sample_quantile(r40.gamma_hat, 0.75) -
                       sample_quantile(r40.gamma_hat, 0.25);
  CHECK(iqr50 > 0.0);
  CHECK(iqr50 / iqr40 > 0.9);
  CHECK(iqr50 / iqr40 < 1.1);
}

TEST_CASE("tau growth: validation") {
  CHECK_THROWS_AS(tau_growth_series(1, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(tau_growth_series(10, 1, 1), std::invalid_argument);
}

TEST_CASE("martingale audit: bounded increments and the exact moment identity") {
  const MartingaleAudit audit = martingale_audit(21, 20000, 41);
  REQUIRE(audit.rows.size() == 20);
  CHECK(audit.max_abs_increment <= 3.0);
  for (const MartingaleRow& row : audit.rows) {
    // (Y_{n+1} - Y_n)^2 is 9 on a reversal and 1 otherwise, so the second
    // moment equals 1 + 8 * (reversal frequency) identically, not just in
    // expectation.
    CHECK(row.second_moment ==
          doctest::Approx(1.0 + 8.0 * row.turn_frequency).epsilon(1e-12));
    CHECK(row.second_moment >= row.mean_increment * row.mean_increment);
    CHECK(row.n_replicas == 20000);
  }
  const MartingaleRow& last = audit.rows.back();
  CHECK(last.n == 20);
  CHECK(std::abs(last.mean_increment) <= 3.0 * last.increment_std_error);
  CHECK(std::abs(last.second_moment - kIncrementSecondMoment) < 0.1);
}

TEST_CASE("martingale audit: exact dynamics smoke run") {
  ExperimentOptions exact;
  exact.mode = ChainMode::Exact;
  const MartingaleAudit audit = martingale_audit(9, 500, 42, exact);
  REQUIRE(audit.rows.size() == 8);
  CHECK(audit.max_abs_increment <= 3.0);
  for (const MartingaleRow& row : audit.rows) {
    CHECK(row.second_moment ==
          doctest::Approx(1.0 + 8.0 * row.turn_frequency).epsilon(1e-12));
  }
  CHECK_THROWS_AS(martingale_audit(2, 100, 1), std::invalid_argument);
}

TEST_CASE("lil scaling: running max grows with the horizon, final law normal") {
  const LilResult r = lil_scaling(10000, 500, 51);
  REQUIRE(r.checkpoints.size() == 3);  // 100, 1000, 10000
  CHECK(r.checkpoints.back() == 10000);
  for (const auto& row : r.running_max) {
    REQUIRE(row.size() == 3);
    CHECK(row[0] <= row[1]);
    CHECK(row[1] <= row[2]);
    // row[0] covers the single index n=100 and can be 0 (X_100 = 0 has even
    // parity); any longer window is positive because X alternates parity.
    CHECK(row[0] >= 0.0);
    CHECK(row[1] > 0.0);
  }
  CHECK(r.median_max > 0.3);
  CHECK(r.median_max < 2.0);
  CHECK(r.mean_series.points.size() == 3);
  CHECK(r.mean_series.reference == 1.0);

  // X_n / sqrt(3n) at n = 10^4 against the standard normal.
  CHECK(normal_ks_pvalue(r.x_final_scaled) > 0.001);

  CHECK_THROWS_AS(lil_scaling(50, 100, 1), std::invalid_argument);
}

TEST_CASE("nt scaling: n / log log T_n approaches 1/log 2 from above") {
  const ScalingSeries s = nt_scaling(40, 300, 61);
  CHECK(s.label == "nt");
  CHECK(s.reference == doctest::Approx(kInvLog2));
  REQUIRE(!s.points.empty());
  CHECK(s.points.front().index >= 2.0);  // n = 1 is excluded by the guard
  const SeriesPoint& last = s.points.back();
  CHECK(last.index == 40.0);
  CHECK(std::abs(last.value - kInvLog2) < 0.05 * kInvLog2);
  const auto at = [&](double n) {
    for (const SeriesPoint& p : s.points) {
      if (p.index == n) return p;
    }
    REQUIRE(false);
    return SeriesPoint{};
  };
  CHECK(at(40.0).abs_dev < at(10.0).abs_dev);
  CHECK(at(40.0).count == 300);
}

TEST_CASE("recurrence: null case and agreement with the reference walk") {
  const RecurrenceResult trivial = recurrence_stats(1, 10, 71);
  CHECK(trivial.mean_returns == 0.0);  // |X_1| = 1: no time to return
  CHECK(trivial.sign_change_fraction == 0.0);

  const RecurrenceResult chain = recurrence_stats(2000, 500, 72);
  const ReferenceWalkStats ref =
      reference_correlated_walk(2000, 500, kTurnProbability, 73);
  std::vector<double> ref_returns(ref.returns.begin(), ref.returns.end());
  const MeanStd ref_ms = mean_std(ref_returns);
  // The chain's site process matches the reference walk asymptotically;
  // at n = 2000 the means should already agree to a factor well within 2.
  CHECK(chain.mean_returns > 0.5 * ref_ms.mean);
  CHECK(chain.mean_returns < 2.0 * ref_ms.mean);
  CHECK(chain.sign_change_fraction > 0.35);
  CHECK(chain.sign_change_fraction < 0.65);
}

TEST_CASE("reference walk: iid limit at turn probability 1/2") {
  const ReferenceWalkStats stats =
      reference_correlated_walk(10000, 500, 0.5, 81);
  std::vector<double> scaled(stats.x_final.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    scaled[i] = stats.x_final[i] / std::sqrt(10000.0);
  }
  CHECK(normal_ks_pvalue(scaled) > 0.001);
}

TEST_CASE("reference walk: reversal count is Binomial(n-1, q)") {
  const std::uint64_t n = 1000, reps = 400;
  const double q = 0.01;
  const ReferenceWalkStats stats = reference_correlated_walk(n, reps, q, 82);
  double mean_turns = 0.0;
  for (std::uint64_t t : stats.turns) mean_turns += static_cast<double>(t);
  mean_turns /= static_cast<double>(reps);
  const double expect = static_cast<double>(n - 1) * q;
  const double sigma =
      std::sqrt(static_cast<double>(n - 1) * q * (1.0 - q) /
                static_cast<double>(reps));
  CHECK(std::abs(mean_turns - expect) <= 3.0 * sigma);
}

TEST_CASE("reference walk: turn frequency 1/4 gives increment second moment 3") {
  const std::uint64_t n = 4000, reps = 400;
  const ReferenceWalkStats stats =
      reference_correlated_walk(n, reps, kTurnProbability, 83);
  // Y-increments are +-1 off a reversal and +-3 on one, so the second moment
  // is 1 + 8q; estimate q from the pooled reversal count.
  double total_turns = 0.0;
  for (std::uint64_t t : stats.turns) total_turns += static_cast<double>(t);
  const double trials = static_cast<double>((n - 1) * reps);
  const double q_hat = total_turns / trials;
  const double second_moment = 1.0 + 8.0 * q_hat;
  const double sigma = 8.0 * std::sqrt(0.25 * 0.75 / trials);
  CHECK(std::abs(second_moment - kIncrementSecondMoment) <= 3.0 * sigma);
}

TEST_CASE("reference walk: path helper and validation") {
  RngStream rng(99);
  const std::vector<std::int64_t> path = reference_walk_path(500, 0.25, rng);
  REQUIRE(path.size() == 500);
  CHECK(std::abs(path[0]) == 1);
  for (std::size_t i = 1; i < path.size(); ++i) {
    CHECK(std::abs(path[i] - path[i - 1]) == 1);
  }
  CHECK_THROWS_AS(reference_walk_path(10, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(reference_walk_path(10, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(reference_correlated_walk(10, 10, -0.1, 1),
                  std::invalid_argument);
}

TEST_CASE("reference walk: calibration summary is internally consistent") {
  const WalkCalibration cal = calibrate_reference_walk(2000, 400, 0.25, 91);
  CHECK(cal.lil_q05 < cal.lil_median);
  CHECK(cal.lil_median < cal.lil_q95);
  CHECK(cal.returns_bound == doctest::Approx(0.5 * cal.mean_returns));
  CHECK(cal.mean_returns > 0.0);
  CHECK(cal.sign_change_fraction > 0.0);
  CHECK(cal.sign_change_fraction < 1.0);
  CHECK_THROWS_AS(calibrate_reference_walk(50, 400, 0.25, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(calibrate_reference_walk(2000, 5, 0.25, 1),
                  std::invalid_argument);
}

TEST_CASE("poisson difference: distance decays in kappa, symmetric at zero") {
  const std::uint64_t n = 200000;
  const DistanceReport lo = poisson_diff_distance(100.0, n, 101);
  const DistanceReport hi = poisson_diff_distance(10000.0, n, 102);
  CHECK(lo.k == 100);
  CHECK(hi.k == 10000);
  CHECK(lo.mc_stderr ==
        doctest::Approx(kKolmogorovStd / std::sqrt(static_cast<double>(n))));
  const double sigma =
      3.0 * std::sqrt(lo.mc_stderr * lo.mc_stderr + hi.mc_stderr * hi.mc_stderr);
  CHECK(lo.ks_statistic - hi.ks_statistic > sigma);

  // Mid-distribution value at 0 is exactly 1/2 in law (symmetric integer
  // difference with an atom at 0).
  const double mid = poisson_diff_midcdf_zero(100.0, n, 101);
  CHECK(std::abs(mid - 0.5) <= 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));

  CHECK_THROWS_AS(poisson_diff_distance(0.0, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(poisson_diff_distance(10.0, 0, 1), std::invalid_argument);
}

TEST_CASE("poisson difference: deterministic given seed") {
  const DistanceReport a = poisson_diff_distance(50.0, 20000, 7);
  const DistanceReport b = poisson_diff_distance(50.0, 20000, 7);
  const DistanceReport c = poisson_diff_distance(50.0, 20000, 8);
  CHECK(a.ks_statistic == b.ks_statistic);
  CHECK(a.ks_statistic != c.ks_statistic);
}

TEST_CASE("replica outputs are identical for any thread count") {
  const LilResult serial = lil_scaling(400, 60, 111);
  ExperimentOptions par;
  par.threads = 4;
  const LilResult parallel = lil_scaling(400, 60, 111, par);
  REQUIRE(serial.running_max.size() == parallel.running_max.size());
  for (std::size_t r = 0; r < serial.running_max.size(); ++r) {
    CHECK(serial.running_max[r] == parallel.running_max[r]);
  }
  CHECK(serial.x_final_scaled == parallel.x_final_scaled);

  const ReferenceWalkStats ws = reference_correlated_walk(3000, 200, 0.25, 112);
  const ReferenceWalkStats wp =
      reference_correlated_walk(3000, 200, 0.25, 112, 4);
  CHECK(ws.returns == wp.returns);
  CHECK(ws.x_final == wp.x_final);
  CHECK(ws.sign_change_count == wp.sign_change_count);
}

TEST_CASE("statistics helpers: pairwise mean/std and quantiles") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const MeanStd ms = mean_std(v);
  CHECK(ms.mean == doctest::Approx(2.5));
  CHECK(ms.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(ms.count == 4);
  const std::vector<double> with_nan{1.0, std::nan(""), 3.0};
  CHECK(mean_std(with_nan).count == 2);
  CHECK(mean_std(with_nan).mean == doctest::Approx(2.0));

  std::vector<double> q{4.0, 1.0, 3.0, 2.0};
  CHECK(sample_quantile(q, 0.0) == 1.0);
  CHECK(sample_quantile(q, 1.0) == 4.0);
  CHECK(sample_quantile(q, 0.5) == doctest::Approx(2.5));
  CHECK_THROWS_AS(sample_quantile({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(sample_quantile(q, 1.5), std::invalid_argument);
}

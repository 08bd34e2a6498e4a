#include "gslab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "gslab/special.hpp"

namespace gslab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kE = 2.718281828459045;  // domain guard: inner log must
                                          // exceed e before log log is used

// Runs body(replica_index) once for every index.  Workers claim fixed blocks
// of indices, and each body writes only to its replica's output slots, so the
// results are identical for any thread count.  The first exception thrown by
// a body aborts the remaining work and is rethrown on the caller's thread.
template <typename Body>
void for_each_replica(std::uint64_t n_replicas, unsigned threads,
                      const Body& body) {
  if (threads <= 1 || n_replicas < 2) {
    for (std::uint64_t i = 0; i < n_replicas; ++i) body(i);
    return;
  }
  constexpr std::uint64_t kBlock = 64;
  const std::uint64_t n_blocks = (n_replicas + kBlock - 1) / kBlock;
  std::atomic<std::uint64_t> next_block{0};
  std::atomic<bool> abort{false};
  std::exception_ptr error;
  std::mutex error_mu;

  auto worker = [&] {
    for (;;) {
      if (abort.load(std::memory_order_relaxed)) return;
      const std::uint64_t b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      const std::uint64_t lo = b * kBlock;
      const std::uint64_t hi = std::min(n_replicas, lo + kBlock);
      try {
        for (std::uint64_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        abort.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::uint64_t>(threads, n_blocks));
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Pairwise (cascade) summation: error grows like log n instead of n.
double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

// One chain replica: stream derived from (base_seed, replica_index).  In
// exact mode the exact prefix extends to the full run (the integer horizon
// forces the renormalized continuation when it must); in asymptotic mode the
// switch happens at opts.handoff_n.  A replica whose zeta draw exceeds its
// jump budget is redrawn on a fresh attempt-derived stream.
Trajectory run_replica(std::uint64_t n_steps, std::uint64_t base_seed,
                       std::uint64_t replica, const ExperimentOptions& opts) {
  RunSpec spec;
  spec.n_steps = n_steps;
  spec.mode = ChainMode::Asymptotic;
  spec.handoff_n = opts.mode == ChainMode::Exact
                       ? n_steps
                       : std::min<std::uint64_t>(opts.handoff_n, n_steps);
  spec.sampler = opts.sampler;
  spec.zeta_budget = opts.zeta_budget;
  for (unsigned attempt = 0;; ++attempt) {
    spec.seed = attempt == 0
                    ? derive_seed(base_seed, "replica", replica)
                    : derive_seed(base_seed, "replica.retry",
                                  (replica << 6) + attempt);
    try {
      return run(spec);
    } catch (const BudgetExceeded&) {
      if (attempt >= 63) throw;
    }
  }
}

void validate_common(std::uint64_t n_replicas, const ExperimentOptions& opts) {
  if (n_replicas < 1) {
    throw std::invalid_argument("experiments: n_replicas must be >= 1");
  }
  if (opts.handoff_n < 1) {
    throw std::invalid_argument("experiments: handoff_n must be >= 1");
  }
  if (!(opts.sampler.params.lambda > 0.0)) {
    throw std::invalid_argument("experiments: lambda must be positive");
  }
}

// Per-index reduction of a replica-major value matrix (NaN = excluded by a
// domain guard at that index).
SeriesPoint reduce_column(const std::vector<double>& flat, std::uint64_t n_rows,
                          std::uint64_t n_cols, std::uint64_t col, double index,
                          double reference) {
  std::vector<double> column;
  column.reserve(n_rows);
  for (std::uint64_t r = 0; r < n_rows; ++r) {
    const double v = flat[r * n_cols + col];
    if (std::isfinite(v)) column.push_back(v);
  }
  SeriesPoint pt;
  pt.index = index;
  pt.count = column.size();
  if (column.empty()) return pt;
  const MeanStd ms = mean_std(column);
  pt.value = ms.mean;
  pt.std_error = ms.std_error();
  if (std::isfinite(reference)) {
    for (double& v : column) v = std::abs(v - reference);
    pt.abs_dev = mean_std(column).mean;
  }
  return pt;
}

void check_grid_size(std::uint64_t n_replicas, std::uint64_t n_cols) {
  if (n_cols > 0 && n_replicas > (2ull << 27) / n_cols) {
    throw std::invalid_argument(
        "experiments: n_replicas * n_max too large for in-memory reduction");
  }
}

}  // namespace

MeanStd mean_std(const std::vector<double>& values) {
  std::vector<double> buf;
  buf.reserve(values.size());
  for (double v : values) {
    if (std::isfinite(v)) buf.push_back(v);
  }
  MeanStd ms;
  ms.count = buf.size();
  if (buf.empty()) return ms;
  ms.mean = pairwise_sum(buf.data(), buf.size()) /
            static_cast<double>(buf.size());
  if (buf.size() < 2) return ms;
  for (double& v : buf) {
    const double d = v - ms.mean;
    v = d * d;
  }
  ms.sd = std::sqrt(pairwise_sum(buf.data(), buf.size()) /
                    static_cast<double>(buf.size() - 1));
  return ms;
}

double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("sample_quantile: empty sample");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("sample_quantile: p must be in [0,1]");
  }
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (values[lo + 1] - values[lo]) * (h - lo);
}

// --- turning ---------------------------------------------------------------

EstimateResult estimate_turning(std::uint64_t n_index, std::uint64_t n_replicas,
                                std::uint64_t seed,
                                const ExperimentOptions& opts) {
  if (n_index < 2) {
    throw std::invalid_argument("estimate_turning: n_index must be >= 2");
  }
  validate_common(n_replicas, opts);
  const std::uint64_t n_steps = n_index + 1;
  std::vector<std::uint8_t> turned(n_replicas, 0);
  for_each_replica(n_replicas, opts.threads, [&](std::uint64_t r) {
    const Trajectory traj = run_replica(n_steps, seed, r, opts);
    turned[r] = traj.records[n_index].turn ? 1 : 0;
  });
  std::uint64_t count = 0;
  for (std::uint8_t t : turned) count += t;
  const double p = static_cast<double>(count) / static_cast<double>(n_replicas);
  EstimateResult res;
  res.label = "turning";
  res.point = p;
  res.std_error =
      std::sqrt(p * (1.0 - p) / static_cast<double>(n_replicas));
  res.n_replicas = n_replicas;
  res.seed = seed;
  return res;
}

// --- tau growth ------------------------------------------------------------

TauGrowthResult tau_growth_series(std::uint64_t n_max, std::uint64_t n_replicas,
                                  std::uint64_t seed,
                                  const ExperimentOptions& opts) {
  if (n_max < 2) {
    throw std::invalid_argument("tau_growth_series: n_max must be >= 2");
  }
  if (n_replicas < 2) {
    throw std::invalid_argument("tau_growth_series: n_replicas must be >= 2");
  }
  validate_common(n_replicas, opts);
  check_grid_size(n_replicas, n_max);

  std::vector<double> values(n_replicas * n_max, kNaN);
  std::vector<double> gamma_hat(n_replicas, 0.0);
  for_each_replica(n_replicas, opts.threads, [&](std::uint64_t r) {
    const Trajectory traj = run_replica(n_max, seed, r, opts);
    for (std::uint64_t n = 1; n <= n_max; ++n) {
      const double log_tau = traj.records[n - 1].log_tau;
      if (log_tau > kE) {
        values[r * n_max + (n - 1)] =
            std::log(log_tau) / static_cast<double>(n);
      }
    }
    gamma_hat[r] =
        std::ldexp(traj.records[n_max - 1].log_tau, -static_cast<int>(n_max));
  });

  TauGrowthResult res;
  res.n_max = n_max;
  res.n_replicas = n_replicas;
  res.seed = seed;
  res.gamma_hat = std::move(gamma_hat);
  res.series.label = "tau_growth";
  res.series.reference = std::log(2.0);
  res.series.n_replicas = n_replicas;
  res.series.seed = seed;
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    SeriesPoint pt = reduce_column(values, n_replicas, n_max, n - 1,
                                   static_cast<double>(n), res.series.reference);
    if (pt.count > 0) res.series.points.push_back(pt);
  }
  return res;
}

// --- martingale audit ------------------------------------------------------

MartingaleAudit martingale_audit(std::uint64_t n_max, std::uint64_t n_replicas,
                                 std::uint64_t seed,
                                 const ExperimentOptions& opts) {
  if (n_max < 3) {
    throw std::invalid_argument("martingale_audit: n_max must be >= 3");
  }
  if (n_replicas < 2) {
    throw std::invalid_argument("martingale_audit: n_replicas must be >= 2");
  }
  validate_common(n_replicas, opts);
  check_grid_size(n_replicas, n_max);

  const std::uint64_t n_rows = n_max - 1;
  std::vector<std::int8_t> incr(n_replicas * n_rows, 0);
  for_each_replica(n_replicas, opts.threads, [&](std::uint64_t r) {
    const Trajectory traj = run_replica(n_max, seed, r, opts);
    auto y_of = [](const StepRecord& rec) {
      return rec.x + (rec.eta == 1 ? 2 : 0);
    };
    for (std::uint64_t n = 1; n < n_max; ++n) {
      incr[r * n_rows + (n - 1)] =
          static_cast<std::int8_t>(y_of(traj.records[n]) -
                                   y_of(traj.records[n - 1]));
    }
  });

  MartingaleAudit audit;
  audit.n_max = n_max;
  audit.n_replicas = n_replicas;
  audit.seed = seed;
  audit.rows.reserve(n_rows);
  for (std::uint64_t n = 1; n < n_max; ++n) {
    std::int64_t sum = 0, sum_sq = 0;
    std::uint64_t turns = 0;
    for (std::uint64_t r = 0; r < n_replicas; ++r) {
      const std::int64_t d = incr[r * n_rows + (n - 1)];
      sum += d;
      sum_sq += d * d;
      if (d == 3 || d == -3) ++turns;
      audit.max_abs_increment = std::max(
          audit.max_abs_increment, static_cast<double>(d < 0 ? -d : d));
    }
    const double rn = static_cast<double>(n_replicas);
    MartingaleRow row;
    row.n = n;
    row.mean_increment = static_cast<double>(sum) / rn;
    row.second_moment = static_cast<double>(sum_sq) / rn;
    // Integer sums, so the textbook variance formula is exact here.
    const double var =
        (static_cast<double>(sum_sq) -
         static_cast<double>(sum) * static_cast<double>(sum) / rn) /
        (rn - 1.0);
    row.increment_std_error = std::sqrt(std::max(0.0, var) / rn);
    row.turn_frequency = static_cast<double>(turns) / rn;
    row.n_replicas = n_replicas;
    audit.rows.push_back(row);
  }
  return audit;
}

// --- iterated-logarithm scaling --------------------------------------------

namespace {

std::vector<std::uint64_t> decade_checkpoints(std::uint64_t n_max) {
  std::vector<std::uint64_t> cps;
  for (std::uint64_t c = 100; c < n_max; c *= 10) cps.push_back(c);
  if (n_max >= 100) cps.push_back(n_max);
  return cps;
}

double lil_norm(std::uint64_t n, std::int64_t x) {
  // n >= 100 always here, so log n > e and log log n is safe.
  const double nd = static_cast<double>(n);
  return std::abs(static_cast<double>(x)) /
         std::sqrt(6.0 * nd * std::log(std::log(nd)));
}

}  // namespace

LilResult lil_scaling(std::uint64_t n_max, std::uint64_t n_replicas,
                      std::uint64_t seed, const ExperimentOptions& opts) {
  if (n_max < 100) {
    throw std::invalid_argument("lil_scaling: n_max must be >= 100");
  }
  if (n_replicas < 2) {
    throw std::invalid_argument("lil_scaling: n_replicas must be >= 2");
  }
  validate_common(n_replicas, opts);

  LilResult res;
  res.checkpoints = decade_checkpoints(n_max);
  res.running_max.assign(n_replicas,
                         std::vector<double>(res.checkpoints.size(), 0.0));
  res.x_final_scaled.assign(n_replicas, 0.0);
  res.n_max = n_max;
  res.n_replicas = n_replicas;
  res.seed = seed;

  for_each_replica(n_replicas, opts.threads, [&](std::uint64_t r) {
    const Trajectory traj = run_replica(n_max, seed, r, opts);
    double running = 0.0;
    std::size_t cp = 0;
    for (std::uint64_t n = 100; n <= n_max; ++n) {
      running = std::max(running, lil_norm(n, traj.records[n - 1].x));
      while (cp < res.checkpoints.size() && res.checkpoints[cp] == n) {
        res.running_max[r][cp] = running;
        ++cp;
      }
    }
    res.x_final_scaled[r] =
        static_cast<double>(traj.records[n_max - 1].x) /
        std::sqrt(3.0 * static_cast<double>(n_max));
  });

  res.mean_series.label = "lil";
  res.mean_series.reference = 1.0;
  res.mean_series.n_replicas = n_replicas;
  res.mean_series.seed = seed;
  std::vector<double> column(n_replicas);
  for (std::size_t c = 0; c < res.checkpoints.size(); ++c) {
    for (std::uint64_t r = 0; r < n_replicas; ++r) {
      column[r] = res.running_max[r][c];
    }
    const MeanStd ms = mean_std(column);
    SeriesPoint pt;
    pt.index = static_cast<double>(res.checkpoints[c]);
    pt.value = ms.mean;
    pt.std_error = ms.std_error();
    pt.count = ms.count;
    res.mean_series.points.push_back(pt);
    if (c + 1 == res.checkpoints.size()) {
      res.median_max = sample_quantile(column, 0.5);
    }
  }
  return res;
}

// --- clock scaling ---------------------------------------------------------

ScalingSeries nt_scaling(std::uint64_t n_max, std::uint64_t n_replicas,
                         std::uint64_t seed, const ExperimentOptions& opts) {
  if (n_max < 2) {
    throw std::invalid_argument("nt_scaling: n_max must be >= 2");
  }
  if (n_replicas < 2) {
    throw std::invalid_argument("nt_scaling: n_replicas must be >= 2");
  }
  validate_common(n_replicas, opts);
  check_grid_size(n_replicas, n_max);

  // n = 1 is excluded: log T_1 can be <= 0 and log log degenerate.
  const std::uint64_t n_cols = n_max - 1;
  std::vector<double> values(n_replicas * n_cols, kNaN);
  for_each_replica(n_replicas, opts.threads, [&](std::uint64_t r) {
    const Trajectory traj = run_replica(n_max, seed, r, opts);
    for (std::uint64_t n = 2; n <= n_max; ++n) {
      const double log_t = traj.records[n - 1].log_t;
      if (log_t > kE) {
        values[r * n_cols + (n - 2)] =
            static_cast<double>(n) / std::log(log_t);
      }
    }
  });

  ScalingSeries series;
  series.label = "nt";
  series.reference = kInvLog2;
  series.n_replicas = n_replicas;
  series.seed = seed;
  for (std::uint64_t n = 2; n <= n_max; ++n) {
    SeriesPoint pt = reduce_column(values, n_replicas, n_cols, n - 2,
                                   static_cast<double>(n), series.reference);
    if (pt.count > 0) series.points.push_back(pt);
  }
  return series;
}

// --- recurrence ------------------------------------------------------------

RecurrenceResult recurrence_stats(std::uint64_t n_max, std::uint64_t n_replicas,
                                  std::uint64_t seed,
                                  const ExperimentOptions& opts) {
  if (n_max < 1) {
    throw std::invalid_argument("recurrence_stats: n_max must be >= 1");
  }
  if (n_replicas < 2) {
    throw std::invalid_argument("recurrence_stats: n_replicas must be >= 2");
  }
  validate_common(n_replicas, opts);

  std::vector<double> returns(n_replicas, 0.0);
  std::vector<std::uint8_t> changed(n_replicas, 0);
  for_each_replica(n_replicas, opts.threads, [&](std::uint64_t r) {
    const Trajectory traj = run_replica(n_max, seed, r, opts);
    std::uint64_t zero_visits = 0;
    bool pos = false, neg = false;
    for (std::uint64_t n = 1; n <= n_max; ++n) {
      const std::int64_t x = traj.records[n - 1].x;
      if (x == 0) ++zero_visits;
      if (2 * n > n_max) {  // window: the last half of the run
        pos = pos || x > 0;
        neg = neg || x < 0;
      }
    }
    returns[r] = static_cast<double>(zero_visits);
    changed[r] = (pos && neg) ? 1 : 0;
  });

  RecurrenceResult res;
  res.n_max = n_max;
  res.n_replicas = n_replicas;
  res.seed = seed;
  const MeanStd ms = mean_std(returns);
  res.mean_returns = ms.mean;
  res.returns_std_error = ms.std_error();
  std::uint64_t count = 0;
  for (std::uint8_t c : changed) count += c;
  const double f = static_cast<double>(count) / static_cast<double>(n_replicas);
  res.sign_change_fraction = f;
  res.fraction_std_error =
      std::sqrt(f * (1.0 - f) / static_cast<double>(n_replicas));
  return res;
}

// --- reference correlated walk ---------------------------------------------

std::vector<std::int64_t> reference_walk_path(std::uint64_t n_max,
                                              double turn_prob,
                                              RngStream& rng) {
  if (!(turn_prob > 0.0 && turn_prob < 1.0)) {
    throw std::invalid_argument(
        "reference_walk_path: turn_prob must be in (0,1)");
  }
  std::vector<std::int64_t> path(n_max);
  std::int64_t x = 0;
  int eta = 0;
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    if (n == 1) {
      eta = rng.coin() ? 1 : -1;
    } else if (rng.bernoulli(turn_prob)) {
      eta = -eta;
    }
    x += eta;
    path[n - 1] = x;
  }
  return path;
}

ReferenceWalkStats reference_correlated_walk(std::uint64_t n_max,
                                             std::uint64_t n_replicas,
                                             double turn_prob,
                                             std::uint64_t seed,
                                             unsigned threads) {
  if (!(turn_prob > 0.0 && turn_prob < 1.0)) {
    throw std::invalid_argument(
        "reference_correlated_walk: turn_prob must be in (0,1)");
  }
  if (n_max < 1 || n_replicas < 1) {
    throw std::invalid_argument(
        "reference_correlated_walk: n_max and n_replicas must be >= 1");
  }

  ReferenceWalkStats stats;
  stats.checkpoints = decade_checkpoints(n_max);
  stats.running_max.assign(n_replicas,
                           std::vector<double>(stats.checkpoints.size(), 0.0));
  stats.x_final.assign(n_replicas, 0.0);
  stats.returns.assign(n_replicas, 0);
  stats.turns.assign(n_replicas, 0);
  stats.turn_prob = turn_prob;
  stats.n_max = n_max;
  stats.n_replicas = n_replicas;
  stats.seed = seed;

  std::vector<std::uint8_t> changed(n_replicas, 0);
  for_each_replica(n_replicas, threads, [&](std::uint64_t r) {
    RngStream rng = RngStream::derive(seed, "replica", r);
    std::int64_t x = 0;
    int eta = 0;
    std::uint64_t zero_visits = 0, turns = 0;
    bool pos = false, neg = false;
    double running = 0.0;
    std::size_t cp = 0;
    for (std::uint64_t n = 1; n <= n_max; ++n) {
      if (n == 1) {
        eta = rng.coin() ? 1 : -1;
      } else if (rng.bernoulli(turn_prob)) {
        eta = -eta;
        ++turns;
      }
      x += eta;
      if (x == 0) ++zero_visits;
      if (2 * n > n_max) {
        pos = pos || x > 0;
        neg = neg || x < 0;
      }
      if (n >= 100) {
        running = std::max(running, lil_norm(n, x));
        while (cp < stats.checkpoints.size() && stats.checkpoints[cp] == n) {
          stats.running_max[r][cp] = running;
          ++cp;
        }
      }
    }
    stats.x_final[r] = static_cast<double>(x);
    stats.returns[r] = zero_visits;
    stats.turns[r] = turns;
    changed[r] = (pos && neg) ? 1 : 0;
  });
  for (std::uint8_t c : changed) stats.sign_change_count += c;
  return stats;
}

WalkCalibration calibrate_reference_walk(std::uint64_t n_max,
                                         std::uint64_t n_replicas,
                                         double turn_prob, std::uint64_t seed,
                                         unsigned threads) {
  if (n_max < 100) {
    throw std::invalid_argument(
        "calibrate_reference_walk: n_max must be >= 100");
  }
  if (n_replicas < 10) {
    throw std::invalid_argument(
        "calibrate_reference_walk: n_replicas must be >= 10");
  }
  const ReferenceWalkStats stats =
      reference_correlated_walk(n_max, n_replicas, turn_prob, seed, threads);

  std::vector<double> maxima(n_replicas);
  std::vector<double> returns(n_replicas);
  const std::size_t last = stats.checkpoints.size() - 1;
  for (std::uint64_t r = 0; r < n_replicas; ++r) {
    maxima[r] = stats.running_max[r][last];
    returns[r] = static_cast<double>(stats.returns[r]);
  }

  WalkCalibration cal;
  cal.n_max = n_max;
  cal.n_replicas = n_replicas;
  cal.seed = seed;
  cal.turn_prob = turn_prob;
  cal.lil_q05 = sample_quantile(maxima, 0.05);
  cal.lil_median = sample_quantile(maxima, 0.5);
  cal.lil_q95 = sample_quantile(maxima, 0.95);
  const MeanStd ms = mean_std(returns);
  cal.mean_returns = ms.mean;
  cal.sd_returns = ms.sd;
  // Bound with a factor-2 safety margin: the chain's site process matches
  // this walk only asymptotically, and both sides carry MC noise.
  cal.returns_bound = 0.5 * ms.mean;
  cal.sign_change_fraction = static_cast<double>(stats.sign_change_count) /
                             static_cast<double>(n_replicas);
  return cal;
}

// --- normalized Poisson difference -----------------------------------------

namespace {

std::vector<double> poisson_diff_samples(double kappa, std::uint64_t n_samples,
                                         std::uint64_t seed) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw std::invalid_argument("poisson_diff: kappa must be positive");
  }
  if (n_samples < 1) {
    throw std::invalid_argument("poisson_diff: n_samples must be >= 1");
  }
  RngStream rng = RngStream::derive(seed, "poisson_diff.sample", 0);
  const double scale = 1.0 / std::sqrt(kappa);
  std::vector<double> d(n_samples);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    const double a = static_cast<double>(rng.poisson(kappa));
    const double b = static_cast<double>(rng.poisson(kappa));
    d[i] = (a - b) * scale;
  }
  return d;
}

}  // namespace

DistanceReport poisson_diff_distance(double kappa, std::uint64_t n_samples,
                                     std::uint64_t seed) {
  std::vector<double> d = poisson_diff_samples(kappa, n_samples, seed);
  std::sort(d.begin(), d.end());

  // Grid: 200 equispaced quantiles of the N(0,2) limit; the reference CDF at
  // grid point j is the quantile level itself.
  constexpr int kGrid = 200;
  double sup = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n_samples);
  for (int j = 1; j <= kGrid; ++j) {
    const double p = (j - 0.5) / kGrid;
    const double u = std::sqrt(2.0) * normal_sf_inv(1.0 - p);
    const auto it = std::upper_bound(d.begin(), d.end(), u);
    const double emp = static_cast<double>(it - d.begin()) * inv_n;
    sup = std::max(sup, std::abs(emp - p));
  }

  DistanceReport report;
  report.k = static_cast<std::uint64_t>(std::llround(kappa));
  report.n_samples = n_samples;
  report.ks_statistic = sup;
  report.mc_stderr = kKolmogorovStd / std::sqrt(static_cast<double>(n_samples));
  report.seed = seed;
  return report;
}

OracleComparison compare_chain_to_oracle(std::uint64_t sites,
                                         std::uint64_t n_replicas, double t_max,
                                         double lambda, std::uint64_t seed,
                                         unsigned threads) {
  if (sites < 1 || sites > 16) {
    throw std::invalid_argument("compare_chain_to_oracle: sites must be 1..16");
  }
  if (n_replicas < 2) {
    throw std::invalid_argument(
        "compare_chain_to_oracle: n_replicas must be >= 2");
  }
  if (!(t_max > 0.0)) {
    throw std::invalid_argument("compare_chain_to_oracle: t_max must be > 0");
  }
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("compare_chain_to_oracle: lambda must be > 0");
  }

  const std::uint64_t cells = 1ull << sites;
  const double log_t_max = std::log(t_max);

  // Per-replica sign-path cell, or -1 when the replica misses the time cut.
  // Slots keep the tally independent of the thread count.
  std::vector<std::int32_t> chain_cell(n_replicas, -1);
  std::vector<std::int32_t> oracle_cell(n_replicas, -1);

  ExperimentOptions opts;
  opts.handoff_n = sites;  // integer recursion stays exact over the window
  opts.sampler.params.lambda = lambda;
  opts.threads = threads;

  for_each_replica(n_replicas, threads, [&](std::uint64_t r) {
    const Trajectory traj = run_replica(sites, seed, r, opts);
    if (traj.records.back().log_t <= log_t_max) {
      std::uint32_t cell = 0;
      for (std::uint64_t i = 0; i < sites; ++i) {
        if (traj.records[i].eta > 0) cell |= 1u << i;
      }
      chain_cell[r] = static_cast<std::int32_t>(cell);
    }

    const EventLog log = continuous_oracle(
        t_max, lambda, lambda, derive_seed(seed, "oracle.replica", r));
    if (log.emptied_sites.size() >= sites + 1) {
      std::uint32_t cell = 0;
      bool valid = true;
      for (std::uint64_t i = 0; i < sites; ++i) {
        const std::int64_t d =
            log.emptied_sites[i + 1] - log.emptied_sites[i];
        if (d == 1) {
          cell |= 1u << i;
        } else if (d != -1) {
          valid = false;  // should be unreachable: moves are nearest-neighbor
          break;
        }
      }
      if (valid) oracle_cell[r] = static_cast<std::int32_t>(cell);
    }
  });

  std::vector<double> a(cells, 0.0), b(cells, 0.0);
  double n_a = 0.0, n_b = 0.0;
  for (std::uint64_t r = 0; r < n_replicas; ++r) {
    if (chain_cell[r] >= 0) {
      a[static_cast<std::uint32_t>(chain_cell[r])] += 1.0;
      n_a += 1.0;
    }
    if (oracle_cell[r] >= 0) {
      b[static_cast<std::uint32_t>(oracle_cell[r])] += 1.0;
      n_b += 1.0;
    }
  }
  if (n_a == 0.0 || n_b == 0.0) {
    throw std::runtime_error(
        "compare_chain_to_oracle: no replicas passed the time cut; raise "
        "t_max or n_replicas");
  }

  double chi2 = 0.0;
  std::uint64_t occupied = 0;
  for (std::uint64_t c = 0; c < cells; ++c) {
    const double total = a[c] + b[c];
    if (total == 0.0) continue;
    ++occupied;
    const double diff = a[c] / n_a - b[c] / n_b;
    chi2 += n_a * n_b * diff * diff / total;
  }

  OracleComparison cmp;
  cmp.chi_square = chi2;
  cmp.dof = occupied > 1 ? occupied - 1 : 0;
  cmp.p_value =
      cmp.dof > 0 ? chi_square_sf(chi2, static_cast<double>(cmp.dof)) : 1.0;
  cmp.n_chain = static_cast<std::uint64_t>(n_a);
  cmp.n_oracle = static_cast<std::uint64_t>(n_b);
  cmp.n_replicas = n_replicas;
  cmp.sites = sites;
  cmp.t_max = t_max;
  cmp.lambda = lambda;
  cmp.seed = seed;
  return cmp;
}

RegimeReport oracle_regime_report(double lambda, double mu, double t_max,
                                  std::uint64_t n_replicas, std::uint64_t seed,
                                  unsigned threads) {
  if (!(lambda > 0.0) || !(mu > 0.0)) {
    throw std::invalid_argument("oracle_regime_report: rates must be > 0");
  }
  if (!(t_max > 0.0)) {
    throw std::invalid_argument("oracle_regime_report: t_max must be > 0");
  }
  if (n_replicas < 1) {
    throw std::invalid_argument("oracle_regime_report: n_replicas must be >= 1");
  }

  std::vector<double> emptyings(n_replicas, 0.0);
  std::vector<std::uint8_t> stuck(n_replicas, 0);
  for_each_replica(n_replicas, threads, [&](std::uint64_t r) {
    const EventLog log = continuous_oracle(
        t_max, lambda, mu, derive_seed(seed, "oracle.replica", r));
    emptyings[r] = static_cast<double>(log.emptied_sites.size() - 1);
    // T_0 = 0 is always present, so a replica with no emptyings counts as
    // stuck from the start.
    stuck[r] = log.emptying_times.back() <= 0.5 * t_max ? 1 : 0;
  });

  RegimeReport report;
  report.mean_emptyings = mean_std(emptyings).mean;
  double n_stuck = 0.0;
  for (std::uint8_t s : stuck) n_stuck += s;
  report.stuck_fraction = n_stuck / static_cast<double>(n_replicas);
  report.n_replicas = n_replicas;
  report.t_max = t_max;
  report.lambda = lambda;
  report.mu = mu;
  report.seed = seed;
  return report;
}

double poisson_diff_midcdf_zero(double kappa, std::uint64_t n_samples,
                                std::uint64_t seed) {
  const std::vector<double> d = poisson_diff_samples(kappa, n_samples, seed);
  double below = 0.0, at = 0.0;
  for (double v : d) {
    if (v < 0.0) {
      below += 1.0;
    } else if (v == 0.0) {
      at += 1.0;
    }
  }
  return (below + 0.5 * at) / static_cast<double>(n_samples);
}

}  // namespace gslab

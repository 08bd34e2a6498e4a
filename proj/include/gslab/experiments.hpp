#pragma once
// Monte Carlo estimators over chain replicas: turning frequency, growth of
// the emptying durations, the position martingale audit, iterated-logarithm
// and clock scalings, recurrence counts, the pure correlated walk used to
// calibrate finite-n bands, and the normalized Poisson-difference distance.
//
// Every estimator is deterministic given (seed, parameters): replica r uses
// the stream derived from (seed, "replica", r), and reduction merges fixed
// blocks of replicas in index order, so results are identical for any thread
// count.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gslab/chain.hpp"
#include "gslab/hitting.hpp"
#include "gslab/rng.hpp"

namespace gslab {

// Limit constants the estimators converge to.
inline constexpr double kTurnProbability = 0.25;          // direction reversal
inline constexpr double kIncrementSecondMoment = 3.0;     // E[(Y'-Y)^2]
inline constexpr double kInvLog2 = 1.4426950408889634;    // n / log log T_n
inline double lil_time_prefactor() {                      // sqrt(6 / log 2)
  return std::sqrt(6.0 / std::log(2.0));
}

// --- result types ----------------------------------------------------------

struct EstimateResult {
  std::string label;
  double point = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n_replicas)
  std::uint64_t n_replicas = 0;
  std::uint64_t seed = 0;
};

struct SeriesPoint {
  double index = 0.0;      // step index n
  double value = 0.0;      // mean over contributing replicas
  double std_error = 0.0;  // sample std / sqrt(count)
  double abs_dev = 0.0;    // mean |value - reference| (0 if no reference)
  std::uint64_t count = 0; // replicas passing the domain guard at this index
};

struct ScalingSeries {
  std::string label;
  double reference = 0.0;  // limit constant the series approaches (NaN: none)
  std::uint64_t n_replicas = 0;
  std::uint64_t seed = 0;
  std::vector<SeriesPoint> points;  // strictly increasing in index
};

struct MartingaleRow {
  std::uint64_t n = 0;            // increment from step n to n+1
  double mean_increment = 0.0;    // empirical E[Y_{n+1} - Y_n]
  double second_moment = 0.0;     // empirical E[(Y_{n+1} - Y_n)^2]
  double increment_std_error = 0.0;
  double turn_frequency = 0.0;    // empirical reversal frequency at step n+1
  std::uint64_t n_replicas = 0;
};

struct MartingaleAudit {
  std::vector<MartingaleRow> rows;  // n = 1 .. n_max - 1
  double max_abs_increment = 0.0;   // over every replica and step; <= 3
  std::uint64_t n_max = 0;
  std::uint64_t n_replicas = 0;
  std::uint64_t seed = 0;
};

struct TauGrowthResult {
  ScalingSeries series;           // n -> mean of log log tau_n / n
  std::vector<double> gamma_hat;  // per replica: log tau_{n_max} / 2^{n_max}
  std::uint64_t n_max = 0;
  std::uint64_t n_replicas = 0;
  std::uint64_t seed = 0;
};

struct LilResult {
  // Running maximum of |X_n| / sqrt(6 n log log n) over n in [100, cp],
  // recorded at decade checkpoints cp (last checkpoint = n_max).
  std::vector<std::uint64_t> checkpoints;
  std::vector<std::vector<double>> running_max;  // [replica][checkpoint]
  std::vector<double> x_final_scaled;            // X_{n_max} / sqrt(3 n_max)
  ScalingSeries mean_series;                     // checkpoint -> mean of max
  double median_max = 0.0;  // median of running max at the last checkpoint
  std::uint64_t n_max = 0;
  std::uint64_t n_replicas = 0;
  std::uint64_t seed = 0;
};

struct RecurrenceResult {
  double mean_returns = 0.0;  // visits of X_n to 0, n in [1, n_max]
  double returns_std_error = 0.0;
  double sign_change_fraction = 0.0;  // replicas visiting both signs in the
                                      // window n in (n_max/2, n_max]
  double fraction_std_error = 0.0;
  std::uint64_t n_max = 0;
  std::uint64_t n_replicas = 0;
  std::uint64_t seed = 0;
};

struct ReferenceWalkStats {
  // Same per-replica statistics as lil_scaling / recurrence_stats, computed
  // on the pure correlated walk (fixed reversal probability).
  std::vector<std::uint64_t> checkpoints;
  std::vector<std::vector<double>> running_max;  // [replica][checkpoint]
  std::vector<double> x_final;                   // X_{n_max}
  std::vector<std::uint64_t> returns;            // zero visits per replica
  std::vector<std::uint64_t> turns;              // direction reversals
  std::uint64_t sign_change_count = 0;  // replicas with both signs in the
                                        // window n in (n_max/2, n_max]
  double turn_prob = 0.0;
  std::uint64_t n_max = 0;
  std::uint64_t n_replicas = 0;
  std::uint64_t seed = 0;
};

// Band summary distilled from a reference-walk run; committed as a golden
// file and regenerated bit-identically from the embedded parameters.
struct WalkCalibration {
  std::uint64_t n_max = 0;
  std::uint64_t n_replicas = 0;
  std::uint64_t seed = 0;
  double turn_prob = 0.0;
  double lil_q05 = 0.0;     // quantiles of the running max at n_max
  double lil_median = 0.0;
  double lil_q95 = 0.0;
  double mean_returns = 0.0;
  double sd_returns = 0.0;
  double returns_bound = 0.0;  // acceptance bound: mean_returns / 2
  double sign_change_fraction = 0.0;
};

// --- shared options --------------------------------------------------------

// Walk draws during replica runs use the capped-continuation sampler with
// this jump cap: the raw first-passage walk has infinite expected length, so
// at replica scale a single draw would dominate the whole run.
inline constexpr std::uint64_t kEstimatorWalkCap = 1ull << 20;

struct ExperimentOptions {
  ExperimentOptions() { sampler.walk_cap = kEstimatorWalkCap; }
  // Exact mode runs the integer dynamics as far as the 2^53 horizon allows
  // in each replica (typically 3-8 steps) and then continues with the
  // renormalized recursion; indices past the horizon are unreachable
  // exactly.  Asymptotic mode switches after handoff_n steps regardless.
  ChainMode mode = ChainMode::Asymptotic;
  std::uint64_t handoff_n = 6;
  HittingSampler sampler;  // carries lambda and the zeta sampling method
  std::optional<std::uint64_t> zeta_budget;
  unsigned threads = 1;
};

// --- estimators ------------------------------------------------------------

// Empirical frequency of {eta_{n+1} != eta_n} at step n_index (the direction
// reversal probability; -> 1/4).  Requires n_index >= 2.
EstimateResult estimate_turning(std::uint64_t n_index, std::uint64_t n_replicas,
                                std::uint64_t seed,
                                const ExperimentOptions& opts = {});

// Per-n mean and spread of log log tau_n / n (-> log 2), plus the per-replica
// normalized limit log tau_{n_max} / 2^{n_max}.  Requires n_max >= 2,
// n_replicas >= 2.
TauGrowthResult tau_growth_series(std::uint64_t n_max, std::uint64_t n_replicas,
                                  std::uint64_t seed,
                                  const ExperimentOptions& opts = {});

// Per-n increment statistics of Y_n = X_n + 2*1{eta_n = +1}: mean increment
// (-> 0), second moment (-> 3), and the reversal frequency tying the two
// together (second moment = 1 + 8q at every n).  Requires n_max >= 3.
MartingaleAudit martingale_audit(std::uint64_t n_max, std::uint64_t n_replicas,
                                 std::uint64_t seed,
                                 const ExperimentOptions& opts = {});

// Running maximum of |X_n| / sqrt(6 n log log n) over n in [100, n_max]
// per replica, plus X_{n_max} / sqrt(3 n_max) for normality checks.
// Requires n_max >= 100, n_replicas >= 2.
LilResult lil_scaling(std::uint64_t n_max, std::uint64_t n_replicas,
                      std::uint64_t seed, const ExperimentOptions& opts = {});

// Per-n mean of n / log log T_n (-> 1/log 2).  Grid starts at n = 2; indices
// where log T_n <= e are excluded by the domain guard (count drops).
ScalingSeries nt_scaling(std::uint64_t n_max, std::uint64_t n_replicas,
                         std::uint64_t seed,
                         const ExperimentOptions& opts = {});

// Mean number of returns of X_n to 0 up to n_max, and the fraction of
// replicas whose sign changes in the last half of the run.
RecurrenceResult recurrence_stats(std::uint64_t n_max, std::uint64_t n_replicas,
                                  std::uint64_t seed,
                                  const ExperimentOptions& opts = {});

// --- reference correlated walk ---------------------------------------------

// One path of the pure correlated walk: first step is a fair +/-1, each later
// step reverses the previous direction with probability turn_prob.  Returns
// positions X_1..X_{n_max}.
std::vector<std::int64_t> reference_walk_path(std::uint64_t n_max,
                                              double turn_prob, RngStream& rng);

// Replica statistics of the pure correlated walk; the oracle from which the
// lil_scaling and recurrence_stats bands are calibrated (turn_prob = 1/4
// matches the chain's limiting direction process).  Requires
// turn_prob in (0,1), n_max >= 1.
ReferenceWalkStats reference_correlated_walk(std::uint64_t n_max,
                                             std::uint64_t n_replicas,
                                             double turn_prob,
                                             std::uint64_t seed,
                                             unsigned threads = 1);

// Distill a reference-walk run into the committed band summary.
WalkCalibration calibrate_reference_walk(std::uint64_t n_max,
                                         std::uint64_t n_replicas,
                                         double turn_prob, std::uint64_t seed,
                                         unsigned threads = 1);

// --- normalized Poisson difference -----------------------------------------

// Sup-distance between the empirical CDF of (nu - nu')/sqrt(kappa) for
// independent Poisson(kappa) pairs and the N(0, 2) limit, evaluated on a
// fixed grid of 200 equispaced quantiles of the limit law.  The report's k
// field carries round(kappa).
DistanceReport poisson_diff_distance(double kappa, std::uint64_t n_samples,
                                     std::uint64_t seed);

// Empirical mid-distribution value at 0 of the same sample:
// Pr(D < 0) + Pr(D = 0)/2.  Equals 1/2 in law (the difference is symmetric
// with an atom at 0); reuses the stream of poisson_diff_distance.
double poisson_diff_midcdf_zero(double kappa, std::uint64_t n_samples,
                                std::uint64_t seed);

// --- cross-implementation consistency checks --------------------------------

// Two-sample chi-square comparison of the direction signs (eta_1..eta_sites)
// of the first emptied sites between the integer-time chain and the
// event-driven continuous simulation.  Both samples are conditioned on the
// same event {T_sites <= t_max}: the unconditioned emptying times are heavy
// tailed, so a shared time cap is the only way to bound the continuous run,
// and applying the identical cut to both sides keeps the null hypothesis
// exact.  Only the critical case (service rate equal to the arrival rate) is
// comparable; the chain is defined for that regime alone.
struct OracleComparison {
  double chi_square = 0.0;
  double p_value = 1.0;
  std::uint64_t dof = 0;        // occupied sign-path cells minus one
  std::uint64_t n_chain = 0;    // chain replicas passing the time cut
  std::uint64_t n_oracle = 0;   // continuous replicas passing the time cut
  std::uint64_t n_replicas = 0; // replicas attempted per side
  std::uint64_t sites = 0;
  double t_max = 0.0;
  double lambda = 1.0;
  std::uint64_t seed = 0;
};
OracleComparison compare_chain_to_oracle(std::uint64_t sites,
                                         std::uint64_t n_replicas, double t_max,
                                         double lambda, std::uint64_t seed,
                                         unsigned threads = 1);

// Off-critical demonstration driven by the continuous simulation alone:
// fraction of replicas whose final emptying happens in the first half of
// [0, t_max] (the server then sits at one site for the rest of the run, the
// signature of the transient regime) plus the mean number of emptyings.
struct RegimeReport {
  double stuck_fraction = 0.0;
  double mean_emptyings = 0.0;
  std::uint64_t n_replicas = 0;
  double t_max = 0.0;
  double lambda = 1.0;
  double mu = 1.0;
  std::uint64_t seed = 0;
};
RegimeReport oracle_regime_report(double lambda, double mu, double t_max,
                                  std::uint64_t n_replicas, std::uint64_t seed,
                                  unsigned threads = 1);

// --- small statistics helpers (shared with tests and tools) ----------------

// Mean / unbiased sample std over finite entries (NaN entries are skipped).
struct MeanStd {
  double mean = 0.0;
  double sd = 0.0;
  std::uint64_t count = 0;
  double std_error() const {
    return count > 0 ? sd / std::sqrt(static_cast<double>(count)) : 0.0;
  }
};
MeanStd mean_std(const std::vector<double>& values);

// Linear-interpolation quantile of a sample (p in [0,1]).
double sample_quantile(std::vector<double> values, double p);

}  // namespace gslab

#pragma once
// Law of the emptying time zeta(k): the first-passage time to 0 of a
// continuous-time symmetric walk started at k with total jump rate 2*lambda.
// At criticality a queue with k customers empties in exactly this time, and
// (2*lambda/k^2) * zeta(k) converges to the standard Levy law S = 1/Z^2.
//
// Samplers: an exact walk simulation (jump-batched, with an optional jump
// budget) and the Levy-limit approximation k^2 S / (2 lambda); Auto picks the
// walk for small k and the limit law for large k, where the distributional
// error O(1/k) is far below desk-scale Monte Carlo noise.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "gslab/rng.hpp"

namespace gslab {

struct CriticalQueueParams {
  double lambda = 1.0;  // arrival rate; service rate equals it at criticality
};

enum class ZetaMethod { ExactWalk, LevyApprox, Auto };

struct HittingSampler {
  CriticalQueueParams params;
  ZetaMethod method = ZetaMethod::Auto;
  std::uint64_t auto_threshold_k = 64;  // Auto: k <= threshold -> ExactWalk
  // Per-round jump cap for walk draws (0 = run the walk to absorption).  The
  // first-passage time has infinite mean, so replica-scale runs must not use
  // the unbounded walk; see sample_zeta_capped for the continuation rule and
  // its (negligible) approximation error.  Ignored when a throwing max_jumps
  // budget is passed explicitly.
  std::uint64_t walk_cap = 0;
};

// Raised when a walk sample runs past its jump budget.  partial_time is the
// time elapsed over the first steps_taken jumps (a lower bound on zeta).
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::uint64_t steps, double partial)
      : std::runtime_error("zeta walk exceeded its jump budget"),
        steps_taken(steps),
        partial_time(partial) {}
  std::uint64_t steps_taken;
  double partial_time;
};

// --- density / distribution functions -------------------------------------

// f_k(u) = (k/u) I_k(2 lambda u) e^{-2 lambda u}; evaluated in log domain.
double zeta_density(std::uint64_t k, double lambda, double u);

// Two-term power tail of Pr(zeta(k) > u); accurate once 2*lambda*u >> k^2.
double zeta_tail(std::uint64_t k, double lambda, double u);

// Pr(zeta(1) > u), absolute accuracy ~1e-9: quadrature of f_1 up to a
// crossover point, analytic power tail beyond it.
double zeta_survival(double lambda, double u);

// Pr(zeta(k) <= u) by quadrature + tail closure (test/diagnostic helper).
double zeta_cdf(std::uint64_t k, double lambda, double u);

// Standard Levy law S = 1/Z^2: F_S(u) = 2 * normal_sf(u^{-1/2}).
double levy_cdf(double u);
double levy_pdf(double u);
double levy_median();

// Pr(Z * sqrt(S) > 1) for independent standard normal Z and standard Levy S,
// computed by quadrature over the implemented survival functions.  The
// limiting direction-reversal probability; equals 1/4.
double quarter_quadrature();

// --- samplers -------------------------------------------------------------

// Exact: simulate the embedded +/-1 walk from k to 0 (signs drawn in 64-bit
// batches), then draw the elapsed time as Gamma(#jumps, 2*lambda) -- the
// holding times are iid Exp(2*lambda) independent of the path, so this is the
// same law as summing them one by one.  Throws BudgetExceeded if the walk is
// still off zero after max_jumps.
double sample_zeta_walk(std::uint64_t k, const HittingSampler& sampler,
                        RngStream& rng,
                        std::optional<std::uint64_t> max_jumps = std::nullopt);

// Levy-limit approximation: k^2 S / (2 lambda), S = 1/Z^2.
double sample_zeta_levy(std::uint64_t k, const HittingSampler& sampler,
                        RngStream& rng);

// Walk draw with bounded expected cost: runs the walk in rounds of at most
// `cap` jumps; a round that ends unabsorbed at height h continues with a
// fresh zeta(h) draw (the Levy limit once h clears auto_threshold_k).  The
// height after ~cap diffusive jumps is of order sqrt(cap), so the
// continuation error is O(Pr(exhaust) / sqrt(cap)) -- with cap 2^20 far
// below Monte Carlo noise -- while the expected jumps per draw drop from
// infinity to O(k * sqrt(cap)).
double sample_zeta_capped(std::uint64_t k, const HittingSampler& sampler,
                          RngStream& rng, std::uint64_t cap);

// Dispatch on sampler.method (Auto: threshold rule above).  Walk draws use
// the throwing max_jumps budget when given, else the capped-continuation
// sampler when sampler.walk_cap > 0, else the unbounded walk.
double sample_zeta(std::uint64_t k, const HittingSampler& sampler,
                   RngStream& rng,
                   std::optional<std::uint64_t> max_jumps = std::nullopt);

// --- empirical distance to the limit law ----------------------------------

// Standard deviation of the asymptotic Kolmogorov distribution (the law of
// sqrt(n) * KS when the sampled law matches the reference exactly):
// sqrt(pi^2/12 - (sqrt(pi/2) ln 2)^2).
inline constexpr double kKolmogorovStd = 0.26033287146241291;

struct DistanceReport {
  std::uint64_t k = 0;
  std::uint64_t n_samples = 0;
  double ks_statistic = 0.0;
  double mc_stderr = 0.0;  // sampling std of the KS estimate, 0.2603/sqrt(n)
  std::uint64_t seed = 0;
  std::uint64_t budget = 0;   // jump budget per draw (0 = unbounded)
  std::uint64_t redraws = 0;  // budget-exceeded draws discarded and redrawn
  std::string to_json() const;
};

// KS distance between the empirical law of 2*lambda*zeta(k)/k^2 (exact walk
// samples; budget-exceeded draws are discarded and redrawn, counted in the
// report) and the standard Levy law.  Requires n_samples >= 1000.
DistanceReport ks_distance_to_levy(std::uint64_t k, std::uint64_t n_samples,
                                   std::uint64_t seed,
                                   const HittingSampler& sampler,
                                   std::uint64_t budget);

// Same run, reported at two sample sizes: `full` uses all n_samples draws,
// `prefix` the first prefix_n.  Because draw i depends only on (seed, i), the
// prefix report is bit-identical to ks_distance_to_levy(k, prefix_n, ...);
// this lets one long run serve both a fixed-size comparison and a
// higher-resolution one without paying for the samples twice.
struct DistancePair {
  DistanceReport full;
  DistanceReport prefix;
};
DistancePair ks_distance_to_levy_with_prefix(std::uint64_t k,
                                             std::uint64_t n_samples,
                                             std::uint64_t prefix_n,
                                             std::uint64_t seed,
                                             const HittingSampler& sampler,
                                             std::uint64_t budget);

}  // namespace gslab

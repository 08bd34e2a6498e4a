#pragma once
// The discrete-time server chain observed at queue-emptying instants, in two
// interoperating forms, plus an event-driven continuous-time simulation used
// as an independent cross-check.
//
// Exact mode keeps every queue count as an exact integer and every elapsed
// time as a double; the emptying durations grow doubly exponentially, so the
// Poisson means the bookkeeping needs cross the exact-integer threshold 2^53
// after a handful of steps.  That is a property of the process, not a bug:
// step_exact throws HorizonExceeded carrying the kinematics of the step that
// could not be completed exactly, so a caller can hand off to the
// renormalized recursion mid-flight.
//
// Asymptotic mode evolves (x, eta, log tau, log T) directly: one standard
// Levy variate S' = 1/Z'^2 per step drives both the duration recursion
// log tau' = 2 log tau + log(lambda S'/2) and the direction decision
// (turn iff Z sqrt(S') > 1 for a fresh standard normal Z); these are the two
// pieces of per-step randomness that survive the renormalization.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gslab/hitting.hpp"
#include "gslab/logscalar.hpp"
#include "gslab/rng.hpp"

namespace gslab {

// Largest Poisson mean the exact integer bookkeeping accepts (2^53; beyond
// it doubles cannot represent every integer, so counts would silently lose
// exactness).
inline constexpr double kMaxExactMean = 9007199254740992.0;

// Queue counts at inspected sites; a site absent from the map has not been
// inspected yet (its backlog is realized lazily on first inspection).
using QueueMap = std::map<std::int64_t, std::uint64_t>;

struct ChainState {
  QueueMap queues;     // inspected sites; invariant: queues[x] == 0
  std::int64_t x = 0;  // server site
  int eta = 0;         // direction of the last move (+1/-1); 0 only at n = 0
  std::uint64_t n = 0;
  LogScalar t;       // total elapsed time T_n
  double tau = 0.0;  // last emptying duration tau_n (0 at n = 0)
  bool gaussian_poisson_used = false;  // some count came from the rounded-
                                       // Gaussian Poisson tier (mean > 1e6)
};

// Raised when completing an exact step would need a Poisson mean beyond
// kMaxExactMean.  The step's kinematics are already determined at that point
// (the destination, direction and duration are drawn before any bookkeeping),
// so they ride along to let the caller continue in asymptotic mode from the
// very step that broke the horizon.
class HorizonExceeded : public std::runtime_error {
 public:
  HorizonExceeded(std::uint64_t step_, std::int64_t x_next_, int eta_next_,
                  double log_tau_next_, double log_t_next_)
      : std::runtime_error("exact-mode step needs a Poisson mean beyond 2^53"),
        step(step_),
        x_next(x_next_),
        eta_next(eta_next_),
        log_tau_next(log_tau_next_),
        log_t_next(log_t_next_) {}
  std::uint64_t step;  // index n+1 of the step that could not complete
  std::int64_t x_next;
  int eta_next;
  double log_tau_next;
  double log_t_next;
};

// Initial state: server at 0, sites {-1, 0, +1} inspected and empty,
// everything else uninspected, T = 0.
ChainState chain_init();

// Direction of the next move: towards the longer neighboring queue, fair
// coin from the dedicated tie stream on equality.  Both neighbors of
// state.x must be inspected (true for chain_init() and after every step).
int next_direction(const ChainState& state, RngStream& tie_rng);

// One exact step: pick the direction, travel one unit (the destination
// gains Poisson(lambda) arrivals en route), serve the destination for
// zeta(count) so tau = 1 + zeta, refresh every other inspected site with
// Poisson(lambda * tau) arrivals, realize a newly adjacent uninspected
// site as Poisson(lambda * T_next), zero the destination.
// Throws HorizonExceeded before mutating anything if a required mean
// exceeds kMaxExactMean; propagates BudgetExceeded from the zeta sampler.
ChainState step_exact(const ChainState& state, const HittingSampler& sampler,
                      RngStream& rng, RngStream& tie_rng,
                      std::optional<std::uint64_t> zeta_budget = std::nullopt);

struct AsymptoticState {
  double log_tau = 0.0;
  double log_tau_prev = 0.0;  // previous step's log tau (secondary term only)
  LogScalar t;                // total elapsed time, log scale
  std::int64_t x = 0;
  int eta = 1;
  std::uint64_t n = 0;
  bool turned = false;  // whether the last step reversed direction
};

struct AsymptoticOptions {
  double lambda = 1.0;
  // Also include the vanishing (tau_{n-1}/tau_n)^{1/2} Z'' term in the
  // direction decision.  It decays doubly exponentially, so leaving it out
  // is the default; the flag exists for bias studies.
  bool secondary_turn_term = false;
};

// Deterministic core of the renormalized step, exposed so tests can force
// the variates: given S' (standard Levy) and z (standard normal), and
// optionally z'' for the secondary term.
AsymptoticState step_asymptotic_forced(const AsymptoticState& state,
                                       const AsymptoticOptions& opts,
                                       double levy_s, double z,
                                       double z_secondary = 0.0);

// One renormalized step: draws S' = 1/Z'^2 and a fresh normal Z from rng.
AsymptoticState step_asymptotic(const AsymptoticState& state,
                                const AsymptoticOptions& opts, RngStream& rng);

// --- whole-trajectory driver ----------------------------------------------

enum class ChainMode { Exact, Asymptotic };

struct StepRecord {
  std::uint64_t n;  // step index, starting at 1
  std::int64_t x;
  int eta;
  bool turn;  // eta differs from the previous step's (false at n = 1)
  double log_tau;
  double log_t;
};

struct Trajectory {
  ChainMode mode = ChainMode::Asymptotic;
  std::uint64_t seed = 0;
  double lambda = 1.0;
  std::optional<std::uint64_t> handoff_n;  // actual exact->asymptotic switch
  bool gaussian_poisson_used = false;
  std::optional<std::uint64_t> zeta_budget;
  std::vector<StepRecord> records;
};

struct RunSpec {
  std::uint64_t n_steps = 10;
  ChainMode mode = ChainMode::Asymptotic;
  // Asymptotic mode: exact steps to run before switching.  The switch
  // happens earlier if the exact horizon intervenes (the carried kinematics
  // seed the recursion, so no step is lost); Trajectory.handoff_n records
  // the step actually used.
  std::uint64_t handoff_n = 6;
  std::uint64_t seed = 0;
  HittingSampler sampler;  // carries lambda and the zeta method
  std::optional<std::uint64_t> zeta_budget;
  bool secondary_turn_term = false;
};

// Run the chain for spec.n_steps steps.  Exact mode rethrows
// HorizonExceeded; Asymptotic mode degrades to the recursion when the
// horizon interrupts the exact prefix.  Deterministic given spec.seed.
Trajectory run(const RunSpec& spec);

// --- readouts from a trajectory -------------------------------------------

// Server position at time t_query (exact-mode trajectories): the server
// leaves X_n at T_n, travels for one time unit to X_{n+1}, then serves
// there until T_{n+1}.  Times are reconstructed from the stored logs, so
// the resolution is limited to ~1e-16 * T.  Throws std::out_of_range if
// t_query is negative or past the simulated horizon.
double server_position(const Trajectory& traj, double t_query);

// N_t: number of emptying instants with T_n <= t, with t given on the log
// scale.  Zero if even T_1 exceeds it.
std::uint64_t count_emptied(const Trajectory& traj, double log_t_query);

// --- continuous-time cross-check ------------------------------------------

enum class EventType { Arrival, ServiceCompletion, DepartureTo };

struct Event {
  double time;
  EventType type;
  std::int64_t site;
};

struct EventLog {
  std::vector<Event> events;  // chronological; arrivals/services at the
                              // served site, departures at relocation end
  std::vector<std::int64_t> emptied_sites;  // X_0 = 0, X_1, ... in order
  std::vector<double> emptying_times;       // T_0 = 0, T_1, ...
  double t_max = 0.0;
  double lambda = 1.0;
  double mu = 1.0;
  std::uint64_t seed = 0;
  bool truncated = false;  // simulation stopped by t_max mid-service
};

// Event-driven simulation of the continuous-time model: per-site Poisson
// arrivals (realized lazily: a site first inspected at time t starts with
// Poisson(lambda * t) customers), exhaustive exponential(mu) service at the
// server's site, unit travel time, greedy direction choice with fair ties.
// Supports lambda != mu for off-critical regime demonstrations.  Runs until
// the clock passes t_max.
EventLog continuous_oracle(double t_max, double lambda, double mu,
                           std::uint64_t seed);

}  // namespace gslab

#include "gslab/chain.hpp"

#include <cmath>
#include <limits>

namespace gslab {

namespace {

void check_initialized(const ChainState& state) {
  if (state.queues.empty()) {
    throw std::invalid_argument("chain: state not initialized (use chain_init)");
  }
}

}  // namespace

ChainState chain_init() {
  ChainState s;
  s.queues[-1] = 0;
  s.queues[0] = 0;
  s.queues[1] = 0;
  return s;
}

int next_direction(const ChainState& state, RngStream& tie_rng) {
  check_initialized(state);
  const auto right = state.queues.find(state.x + 1);
  const auto left = state.queues.find(state.x - 1);
  if (right == state.queues.end() || left == state.queues.end()) {
    throw std::logic_error("next_direction: a neighbor site is uninspected");
  }
  if (right->second > left->second) return +1;
  if (right->second < left->second) return -1;
  return tie_rng.coin() ? +1 : -1;
}

ChainState step_exact(const ChainState& state, const HittingSampler& sampler,
                      RngStream& rng, RngStream& tie_rng,
                      std::optional<std::uint64_t> zeta_budget) {
  check_initialized(state);
  const double lambda = sampler.params.lambda;

  // Kinematics first: direction, travel arrivals, service duration.  These
  // fix the step completely; only the bookkeeping below can hit the horizon.
  const int eta_next = next_direction(state, tie_rng);
  const std::int64_t x_next = state.x + eta_next;
  const std::uint64_t travel_arrivals = rng.poisson(lambda);
  const std::uint64_t served = state.queues.at(x_next) + travel_arrivals;
  const double zeta = sample_zeta(served, sampler, rng, zeta_budget);
  const double tau_next = 1.0 + zeta;
  const LogScalar t_next = state.t + LogScalar::from_linear(tau_next);

  // The step needs Poisson(lambda * tau) at every other inspected site and,
  // when the server reaches the frontier, Poisson(lambda * T) for the newly
  // adjacent site.  Refuse (without touching the state) if either mean is
  // past the exact-integer threshold.
  const bool opens_new_site = state.queues.count(x_next + eta_next) == 0;
  const double refresh_mean = lambda * tau_next;
  const double backlog_mean = lambda * t_next.to_linear();
  if (refresh_mean > kMaxExactMean ||
      (opens_new_site && backlog_mean > kMaxExactMean)) {
    throw HorizonExceeded(state.n + 1, x_next, eta_next, std::log1p(zeta),
                          t_next.log());
  }

  ChainState next = state;
  bool gauss = state.gaussian_poisson_used ||
               RngStream::poisson_uses_gaussian(refresh_mean);
  for (auto& [site, count] : next.queues) {
    if (site == x_next) continue;  // zeroed below; its count is consumed
    count += rng.poisson(refresh_mean);
  }
  if (opens_new_site) {
    next.queues[x_next + eta_next] = rng.poisson(backlog_mean);
    gauss = gauss || RngStream::poisson_uses_gaussian(backlog_mean);
  }
  next.queues[x_next] = 0;
  next.x = x_next;
  next.eta = eta_next;
  next.n = state.n + 1;
  next.t = t_next;
  next.tau = tau_next;
  next.gaussian_poisson_used = gauss;
  return next;
}

AsymptoticState step_asymptotic_forced(const AsymptoticState& state,
                                       const AsymptoticOptions& opts,
                                       double levy_s, double z,
                                       double z_secondary) {
  if (!(levy_s > 0.0)) {
    throw std::invalid_argument("step_asymptotic: S must be positive");
  }
  if (!(opts.lambda > 0.0) || !std::isfinite(opts.lambda)) {
    throw std::invalid_argument("step_asymptotic: lambda must be positive");
  }
  AsymptoticState next = state;
  next.log_tau = 2.0 * state.log_tau + std::log(0.5 * opts.lambda * levy_s);
  next.log_tau_prev = state.log_tau;
  next.t = state.t + LogScalar::from_log(next.log_tau);

  double threshold = 1.0;
  if (opts.secondary_turn_term) {
    // The comparison keeps the (tau_n / tau_{n+1})^{1/2} Z'' term, rescaled
    // into the same units as the leading one.
    threshold += std::sqrt(0.5 * levy_s) *
                 std::exp(0.5 * (state.log_tau - next.log_tau)) * z_secondary;
  }
  const bool turn = z * std::sqrt(levy_s) > threshold;
  next.turned = turn;
  next.eta = turn ? -state.eta : state.eta;
  next.x = state.x + next.eta;
  next.n = state.n + 1;
  return next;
}

AsymptoticState step_asymptotic(const AsymptoticState& state,
                                const AsymptoticOptions& opts, RngStream& rng) {
  double z_levy = rng.normal();
  while (z_levy == 0.0) z_levy = rng.normal();  // S = 1/Z^2 needs Z != 0
  const double levy_s = 1.0 / (z_levy * z_levy);
  const double z = rng.normal();
  const double z_secondary = opts.secondary_turn_term ? rng.normal() : 0.0;
  return step_asymptotic_forced(state, opts, levy_s, z, z_secondary);
}

Trajectory run(const RunSpec& spec) {
  if (spec.n_steps < 1) {
    throw std::invalid_argument("run: n_steps must be >= 1");
  }
  const bool asym = spec.mode == ChainMode::Asymptotic;
  if (asym && (spec.handoff_n < 1 || spec.handoff_n > spec.n_steps)) {
    throw std::invalid_argument("run: need 1 <= handoff_n <= n_steps");
  }

  RngStream rng = RngStream::derive(spec.seed, "chain.main", 0);
  RngStream tie = RngStream::derive(spec.seed, "chain.tie", 0);

  Trajectory traj;
  traj.mode = spec.mode;
  traj.seed = spec.seed;
  traj.lambda = spec.sampler.params.lambda;
  traj.zeta_budget = spec.zeta_budget;
  traj.records.reserve(spec.n_steps);

  const std::uint64_t exact_steps = asym ? spec.handoff_n : spec.n_steps;
  ChainState state = chain_init();
  int prev_eta = 0;
  AsymptoticState asym_state;
  bool handed_off = false;

  for (std::uint64_t step = 1; step <= exact_steps; ++step) {
    try {
      state = step_exact(state, spec.sampler, rng, tie, spec.zeta_budget);
    } catch (const HorizonExceeded& e) {
      if (!asym) throw;
      // Finish this step approximately: its kinematics are already drawn,
      // only the queue bookkeeping is lost, which the recursion never needs.
      traj.records.push_back({e.step, e.x_next, e.eta_next,
                              prev_eta != 0 && e.eta_next != prev_eta,
                              e.log_tau_next, e.log_t_next});
      asym_state.log_tau = e.log_tau_next;
      asym_state.log_tau_prev = std::log(state.tau);
      asym_state.t = LogScalar::from_log(e.log_t_next);
      asym_state.x = e.x_next;
      asym_state.eta = e.eta_next;
      asym_state.n = e.step;
      traj.handoff_n = e.step;
      traj.gaussian_poisson_used = state.gaussian_poisson_used;
      handed_off = true;
      break;
    }
    traj.records.push_back({state.n, state.x, state.eta,
                            prev_eta != 0 && state.eta != prev_eta,
                            std::log(state.tau), state.t.log()});
    prev_eta = state.eta;
  }

  if (!asym) {
    traj.gaussian_poisson_used = state.gaussian_poisson_used;
    return traj;
  }

  if (!handed_off) {
    asym_state.log_tau = std::log(state.tau);
    asym_state.log_tau_prev = 0.0;
    asym_state.t = state.t;
    asym_state.x = state.x;
    asym_state.eta = state.eta;
    asym_state.n = state.n;
    traj.handoff_n = state.n;
    traj.gaussian_poisson_used = state.gaussian_poisson_used;
  }

  AsymptoticOptions opts;
  opts.lambda = spec.sampler.params.lambda;
  opts.secondary_turn_term = spec.secondary_turn_term;
  while (asym_state.n < spec.n_steps) {
    asym_state = step_asymptotic(asym_state, opts, rng);
    traj.records.push_back({asym_state.n, asym_state.x, asym_state.eta,
                            asym_state.turned, asym_state.log_tau,
                            asym_state.t.log()});
  }
  return traj;
}

double server_position(const Trajectory& traj, double t_query) {
  if (traj.mode != ChainMode::Exact) {
    throw std::invalid_argument(
        "server_position: only exact-mode trajectories carry positions "
        "between emptying instants");
  }
  if (traj.records.empty()) {
    throw std::invalid_argument("server_position: empty trajectory");
  }
  if (t_query < 0.0 || !std::isfinite(t_query)) {
    throw std::out_of_range("server_position: t_query outside [0, T_final]");
  }
  const double t_final = std::exp(traj.records.back().log_t);
  if (t_query > t_final) {
    throw std::out_of_range("server_position: t_query outside [0, T_final]");
  }

  // m = number of emptying instants at or before t_query.
  const std::uint64_t m =
      t_query == 0.0 ? 0
                     : count_emptied(traj, std::log(t_query));
  if (m == traj.records.size()) {
    return static_cast<double>(traj.records.back().x);  // t_query == T_final
  }
  const double t_m = m == 0 ? 0.0 : std::exp(traj.records[m - 1].log_t);
  const double x_m =
      m == 0 ? 0.0 : static_cast<double>(traj.records[m - 1].x);
  const auto& next = traj.records[m];  // step m+1, target site next.x
  const double elapsed = t_query - t_m;
  if (elapsed >= 1.0) {
    return static_cast<double>(next.x);  // travel done, serving there
  }
  return x_m + elapsed * (static_cast<double>(next.x) - x_m);
}

std::uint64_t count_emptied(const Trajectory& traj, double log_t_query) {
  std::uint64_t lo = 0, hi = traj.records.size();
  // Largest n with log T_n <= log_t_query; records are sorted by log_t.
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (traj.records[mid].log_t <= log_t_query) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace gslab

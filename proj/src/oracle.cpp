#include <cmath>
#include <stdexcept>

#include "gslab/chain.hpp"

namespace gslab {

namespace {

// Count and last-synchronization time of an inspected site.  Between
// inspections a site accrues arrivals silently; syncing draws the Poisson
// increment for the elapsed interval.  A site first inspected at time t
// starts with its whole backlog, Poisson(lambda * t).
struct TrackedSite {
  std::uint64_t count = 0;
  double last_sync = 0.0;
};

}  // namespace

EventLog continuous_oracle(double t_max, double lambda, double mu,
                           std::uint64_t seed) {
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) {
    throw std::invalid_argument("continuous_oracle: t_max must be finite");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda) || !(mu > 0.0) ||
      !std::isfinite(mu)) {
    throw std::invalid_argument(
        "continuous_oracle: rates must be positive and finite");
  }

  RngStream rng = RngStream::derive(seed, "oracle.main", 0);
  RngStream tie = RngStream::derive(seed, "oracle.tie", 0);

  EventLog log;
  log.t_max = t_max;
  log.lambda = lambda;
  log.mu = mu;
  log.seed = seed;

  std::map<std::int64_t, TrackedSite> sites;
  double now = 0.0;
  std::int64_t x = 0;

  const auto inspect = [&](std::int64_t site) -> std::uint64_t {
    auto [it, inserted] = sites.try_emplace(site);
    if (inserted) {
      it->second.count = rng.poisson(lambda * now);
    } else if (now > it->second.last_sync) {
      it->second.count += rng.poisson(lambda * (now - it->second.last_sync));
    }
    it->second.last_sync = now;
    return it->second.count;
  };

  for (;;) {
    // Serve the queue at x exhaustively: arrivals (rate lambda) and service
    // completions (rate mu) compete; every event here is logged.
    inspect(x);
    TrackedSite& here = sites.at(x);
    while (here.count > 0) {
      now += rng.exponential(lambda + mu);
      if (now > t_max) {
        log.truncated = true;
        return log;
      }
      if (rng.bernoulli(mu / (lambda + mu))) {
        here.count -= 1;
        log.events.push_back({now, EventType::ServiceCompletion, x});
      } else {
        here.count += 1;
        log.events.push_back({now, EventType::Arrival, x});
      }
      here.last_sync = now;
    }

    // Queue empty: this is an emptying instant.
    log.emptied_sites.push_back(x);
    log.emptying_times.push_back(now);

    // Greedy move: inspect both neighbors (left first), go to the longer
    // queue, fair coin on ties, one unit of travel.
    const std::uint64_t left = inspect(x - 1);
    const std::uint64_t right = inspect(x + 1);
    int dir;
    if (right > left) {
      dir = +1;
    } else if (right < left) {
      dir = -1;
    } else {
      dir = tie.coin() ? +1 : -1;
    }
    if (now + 1.0 > t_max) {
      log.truncated = true;
      return log;
    }
    now += 1.0;
    x += dir;
    log.events.push_back({now, EventType::DepartureTo, x});
  }
}

}  // namespace gslab

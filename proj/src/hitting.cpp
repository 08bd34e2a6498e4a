#include "gslab/hitting.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "gslab/special.hpp"

namespace gslab {

namespace {
constexpr double kSqrtPi = 1.77245385090551602730;

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and > 0");
  }
}
}  // namespace

double zeta_density(std::uint64_t k, double lambda, double u) {
  check_lambda(lambda);
  if (k == 0) throw std::invalid_argument("zeta_density: k must be >= 1");
  if (u < 0.0) return 0.0;
  if (u == 0.0) return (k == 1) ? lambda : 0.0;  // small-u limit of f_k
  const double x = 2.0 * lambda * u;
  const double log_f = std::log(static_cast<double>(k)) - std::log(u) +
                       log_bessel_i(k, x) - x;
  return std::exp(log_f);
}

double zeta_tail(std::uint64_t k, double lambda, double u) {
  check_lambda(lambda);
  const double kd = static_cast<double>(k);
  const double c0 = kd / (kSqrtPi * std::sqrt(lambda));
  const double c1 = kd * (4.0 * kd * kd - 1.0) /
                    (48.0 * lambda * kSqrtPi * std::sqrt(lambda));
  return c0 / std::sqrt(u) - c1 / (u * std::sqrt(u));
}

namespace {
// Crossover above which the two-term tail of zeta(k) is accurate to ~1e-9.
double tail_crossover(std::uint64_t k, double lambda) {
  const double kd = static_cast<double>(k);
  return std::fmax(1000.0, 50.0 * kd * kd) / lambda;
}

double integrate_density(std::uint64_t k, double lambda, double a, double b) {
  // Split into geometric panels: the density has scale-1 features near the
  // origin and a slow power tail, so one panel spanning decades converges
  // poorly.
  double total = 0.0;
  double lo = a;
  const auto f = [k, lambda](double u) { return zeta_density(k, lambda, u); };
  while (lo < b) {
    const double hi = std::fmin(b, std::fmax(lo * 4.0, lo + 1.0));
    total += integrate(f, lo, hi, 1e-11);
    lo = hi;
  }
  return total;
}
}  // namespace

double zeta_survival(double lambda, double u) {
  check_lambda(lambda);
  if (u <= 0.0) return 1.0;
  const double ustar = tail_crossover(1, lambda);
  if (u >= ustar) return zeta_tail(1, lambda, u);
  return zeta_tail(1, lambda, ustar) + integrate_density(1, lambda, u, ustar);
}

double zeta_cdf(std::uint64_t k, double lambda, double u) {
  check_lambda(lambda);
  if (u <= 0.0) return 0.0;
  const double ustar = tail_crossover(k, lambda);
  if (u >= ustar) return 1.0 - zeta_tail(k, lambda, u);
  return 1.0 - zeta_tail(k, lambda, ustar) -
         integrate_density(k, lambda, u, ustar);
}

double levy_cdf(double u) {
  if (u <= 0.0) return 0.0;
  return 2.0 * normal_sf(1.0 / std::sqrt(u));
}

double levy_pdf(double u) {
  if (u <= 0.0) return 0.0;
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return inv_sqrt_2pi * std::pow(u, -1.5) * std::exp(-0.5 / u);
}

double levy_median() {
  const double z = normal_sf_inv(0.25);  // F_S(m)=1/2  <=>  normal_sf(m^-1/2)=1/4
  return 1.0 / (z * z);
}

double quarter_quadrature() {
  // Pr(Z sqrt(S) > 1) = int_0^{1/2} Pr(S > normal_sf_inv(u)^-2) du, obtained
  // by conditioning on Z's tail probability u; levy survival and normal
  // quantile are the implemented functions, not a simplified integrand.
  const auto integrand = [](double u) {
    const double z = normal_sf_inv(u);
    return 1.0 - levy_cdf(1.0 / (z * z));
  };
  return integrate(integrand, 0.0, 0.5, 1e-12);
}

namespace {

struct WalkRound {
  bool absorbed;
  std::uint64_t jumps;   // jumps consumed this round
  std::uint64_t height;  // position after the round; 0 iff absorbed
};

// Run the embedded +/-1 walk from k until absorption at 0 or until `budget`
// jumps have been consumed.  While the position sits above 64 a whole word
// of sign bits cannot reach 0, so the word collapses to a popcount.
WalkRound run_walk_round(std::uint64_t k, std::uint64_t budget,
                         RngStream& rng) {
  std::uint64_t jumps = 0;
  std::int64_t pos = static_cast<std::int64_t>(k);
  while (pos > 0) {
    if (jumps >= budget) {
      return {false, jumps, static_cast<std::uint64_t>(pos)};
    }
    const std::uint64_t w = rng.raw64();
    if (pos > 64) {
      pos += 2 * static_cast<std::int64_t>(std::popcount(w)) - 64;
      jumps += 64;
    } else {
      for (int b = 0; b < 64; ++b) {
        pos += ((w >> b) & 1u) ? 1 : -1;
        ++jumps;
        if (pos == 0) break;
      }
    }
  }
  return {true, jumps, 0};
}

}  // namespace

double sample_zeta_walk(std::uint64_t k, const HittingSampler& sampler,
                        RngStream& rng,
                        std::optional<std::uint64_t> max_jumps) {
  const double lambda = sampler.params.lambda;
  check_lambda(lambda);
  if (k == 0) return 0.0;

  const std::uint64_t budget =
      max_jumps.value_or(std::numeric_limits<std::uint64_t>::max());
  const WalkRound round = run_walk_round(k, budget, rng);
  // Elapsed time: sum of the consumed iid Exp(2 lambda) holding times.
  const double elapsed =
      rng.gamma(static_cast<double>(round.jumps), 2.0 * lambda);
  if (!round.absorbed) throw BudgetExceeded(round.jumps, elapsed);
  return elapsed;
}

double sample_zeta_levy(std::uint64_t k, const HittingSampler& sampler,
                        RngStream& rng) {
  const double lambda = sampler.params.lambda;
  check_lambda(lambda);
  if (k == 0) return 0.0;
  double z;
  do {
    z = rng.normal();
  } while (std::fabs(z) < 1e-150);  // S = 1/z^2 must stay finite
  const double kd = static_cast<double>(k);
  const double ratio = kd / z;
  return ratio * ratio / (2.0 * lambda);
}

double sample_zeta_capped(std::uint64_t k, const HittingSampler& sampler,
                          RngStream& rng, std::uint64_t cap) {
  const double lambda = sampler.params.lambda;
  check_lambda(lambda);
  if (cap == 0) {
    throw std::invalid_argument("sample_zeta_capped: cap must be >= 1");
  }
  if (k == 0) return 0.0;

  std::uint64_t total_jumps = 0;
  std::uint64_t height = k;
  double tail = 0.0;
  while (height > 0) {
    if (height > sampler.auto_threshold_k) {
      tail = sample_zeta_levy(height, sampler, rng);
      break;
    }
    const WalkRound round = run_walk_round(height, cap, rng);
    total_jumps += round.jumps;
    height = round.height;
  }
  const double walk_time =
      total_jumps > 0 ? rng.gamma(static_cast<double>(total_jumps), 2.0 * lambda)
                      : 0.0;
  return walk_time + tail;
}

double sample_zeta(std::uint64_t k, const HittingSampler& sampler,
                   RngStream& rng, std::optional<std::uint64_t> max_jumps) {
  const auto walk_draw = [&](std::uint64_t kk) {
    if (max_jumps) return sample_zeta_walk(kk, sampler, rng, max_jumps);
    if (sampler.walk_cap > 0) {
      return sample_zeta_capped(kk, sampler, rng, sampler.walk_cap);
    }
    return sample_zeta_walk(kk, sampler, rng, std::nullopt);
  };
  switch (sampler.method) {
    case ZetaMethod::ExactWalk:
      return walk_draw(k);
    case ZetaMethod::LevyApprox:
      return sample_zeta_levy(k, sampler, rng);
    case ZetaMethod::Auto:
    default:
      if (k <= sampler.auto_threshold_k) return walk_draw(k);
      return sample_zeta_levy(k, sampler, rng);
  }
}

namespace {

// KS distance of the first n entries of w (unsorted; copied and sorted here)
// against the standard Levy law.
double ks_against_levy(const std::vector<double>& w, std::uint64_t n) {
  std::vector<double> s(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n));
  std::sort(s.begin(), s.end());
  double d = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double f = levy_cdf(s[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::fmax(d, std::fmax(std::fabs(f - lo), std::fabs(f - hi)));
  }
  return d;
}

DistanceReport make_distance_report(std::uint64_t k, std::uint64_t n,
                                    double ks, std::uint64_t seed,
                                    std::uint64_t budget,
                                    std::uint64_t redraws) {
  DistanceReport rep;
  rep.k = k;
  rep.n_samples = n;
  rep.ks_statistic = ks;
  rep.mc_stderr = kKolmogorovStd / std::sqrt(static_cast<double>(n));
  rep.seed = seed;
  rep.budget = budget;
  rep.redraws = redraws;
  return rep;
}

}  // namespace

DistancePair ks_distance_to_levy_with_prefix(std::uint64_t k,
                                             std::uint64_t n_samples,
                                             std::uint64_t prefix_n,
                                             std::uint64_t seed,
                                             const HittingSampler& sampler,
                                             std::uint64_t budget) {
  if (n_samples < 1000 || prefix_n < 1000) {
    throw std::invalid_argument("ks_distance_to_levy: need n_samples >= 1000");
  }
  if (prefix_n > n_samples) {
    throw std::invalid_argument(
        "ks_distance_to_levy: prefix_n must not exceed n_samples");
  }
  if (k == 0) throw std::invalid_argument("ks_distance_to_levy: k must be >= 1");
  const double lambda = sampler.params.lambda;
  check_lambda(lambda);

  const double kd = static_cast<double>(k);
  const double scale = 2.0 * lambda / (kd * kd);
  std::vector<double> w(n_samples);
  std::uint64_t redraws = 0;
  std::uint64_t redraws_prefix = 0;
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    RngStream rng = RngStream::derive(seed, "ks_levy.sample", i);
    for (;;) {
      try {
        w[i] = scale * sample_zeta_walk(k, sampler, rng, budget);
        break;
      } catch (const BudgetExceeded&) {
        ++redraws;
        if (i < prefix_n) ++redraws_prefix;
        if (redraws > n_samples) throw;  // budget clearly too small
      }
    }
  }

  DistancePair pair;
  pair.full = make_distance_report(k, n_samples, ks_against_levy(w, n_samples),
                                   seed, budget, redraws);
  pair.prefix = make_distance_report(k, prefix_n, ks_against_levy(w, prefix_n),
                                     seed, budget, redraws_prefix);
  return pair;
}

DistanceReport ks_distance_to_levy(std::uint64_t k, std::uint64_t n_samples,
                                   std::uint64_t seed,
                                   const HittingSampler& sampler,
                                   std::uint64_t budget) {
  return ks_distance_to_levy_with_prefix(k, n_samples, n_samples, seed, sampler,
                                         budget)
      .full;
}

std::string DistanceReport::to_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"k\":" << k << ",\"n_samples\":" << n_samples
     << ",\"ks_statistic\":" << ks_statistic << ",\"mc_stderr\":" << mc_stderr
     << ",\"seed\":" << seed << ",\"budget\":" << budget
     << ",\"redraws\":" << redraws << "}";
  return os.str();
}

}  // namespace gslab

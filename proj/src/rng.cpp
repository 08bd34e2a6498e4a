#include "gslab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace gslab {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view tag,
                          std::uint64_t index) {
  std::uint64_t h = mix64(base_seed ^ fnv1a64(tag));
  return mix64(h ^ mix64(index));
}

double RngStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform01_open_left();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * kPi * u2;
  spare_normal_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

double RngStream::gamma(double shape, double rate) {
  if (shape == 0.0) return 0.0;
  if (!(shape >= 1.0) || !(rate > 0.0)) {
    throw std::invalid_argument("gamma: need shape >= 1 and rate > 0");
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01_open_left();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v / rate;
    }
  }
}

std::uint64_t RngStream::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("poisson: mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  if (mean < 12.0) return poisson_inversion(mean);
  if (mean <= kExactPoissonLimit) return poisson_ptrd(mean);
  // Rounded Gaussian tier.  Means here can exceed what a double counts
  // exactly; callers needing exactness must not reach this branch.
  const double draw = mean + std::sqrt(mean) * normal();
  if (draw <= 0.0) return 0;
  return static_cast<std::uint64_t>(std::llround(draw));
}

std::uint64_t RngStream::poisson_inversion(double mean) {
  const double u = uniform01();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  while (u > cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    if (k > 300) break;  // cdf rounding guard; mass here is ~0
  }
  return k;
}

// Hoermann's PTRD transformed-rejection sampler, exact for mean >= 10.
std::uint64_t RngStream::poisson_ptrd(double mean) {
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);

  for (;;) {
    double u;
    double v = uniform01();
    if (v <= 0.86 * v_r) {
      u = v / v_r - 0.43;
      const double us = 0.5 - std::fabs(u);
      return static_cast<std::uint64_t>(
          std::floor((2.0 * a / us + b) * u + mean + 0.445));
    }
    if (v >= v_r) {
      u = uniform01() - 0.5;
    } else {
      u = v / v_r - 0.93;
      u = ((u < 0.0) ? -0.5 : 0.5) - u;
      v = uniform01() * v_r;
    }
    const double us = 0.5 - std::fabs(u);
    if (us < 0.013 && v > us) continue;
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.445);
    v = v * inv_alpha / (a / (us * us) + b);
    if (kf >= 10.0) {
      if (std::log(v * smu) <=
          (kf + 0.5) * std::log(mean / kf) - mean - kLogSqrt2Pi + kf -
              (1.0 / 12.0 - 1.0 / (360.0 * kf * kf)) / kf) {
        return static_cast<std::uint64_t>(kf);
      }
    } else if (kf >= 0.0) {
      if (std::log(v) <= kf * std::log(mean) - mean - std::lgamma(kf + 1.0)) {
        return static_cast<std::uint64_t>(kf);
      }
    }
  }
}

}  // namespace gslab

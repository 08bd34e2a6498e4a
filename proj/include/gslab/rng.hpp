#pragma once
// Seeded random streams with samplers that are bit-reproducible across
// platforms.  std::mt19937_64 output is pinned by the C++ standard, but the
// standard *distributions* are not, so every sampler here is hand-rolled on
// top of the raw engine.  Committed calibration files depend on this.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace gslab {

// 64-bit mixing used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

// Stable seed for a named stream: (base_seed, tag, index) -> engine seed.
// Distinct tags/indices give streams that behave independently.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view tag,
                          std::uint64_t index = 0);

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static RngStream derive(std::uint64_t base_seed, std::string_view tag,
                          std::uint64_t index = 0) {
    return RngStream(derive_seed(base_seed, tag, index));
  }

  std::uint64_t raw64() { return engine_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1]; safe as a log() argument.
  double uniform01_open_left() { return 1.0 - uniform01(); }

  bool coin() { return (engine_() >> 63) != 0; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller; generates pairs, caches the spare.
  double normal();

  double exponential(double rate) {
    return -std::log(uniform01_open_left()) / rate;
  }

  // Gamma(shape, rate) by Marsaglia-Tsang; requires shape >= 1 (shape 0 -> 0).
  double gamma(double shape, double rate);

  // Poisson sampling tiers:
  //   mean < 12    plain inversion
  //   mean <= 1e6  transformed-rejection (PTRD), exact for all practical means
  //   mean > 1e6   rounded Gaussian, clamped at 0; total-variation error
  //                O(mean^-1/2).  Callers that must stay exact check
  //                poisson_uses_gaussian() and flag or refuse.
  std::uint64_t poisson(double mean);

  static constexpr double kExactPoissonLimit = 1e6;
  static bool poisson_uses_gaussian(double mean) {
    return mean > kExactPoissonLimit;
  }

 private:
  std::uint64_t poisson_inversion(double mean);
  std::uint64_t poisson_ptrd(double mean);

  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace gslab

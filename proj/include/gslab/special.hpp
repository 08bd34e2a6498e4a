#pragma once
// Numeric kernels shared across the project: normal distribution helpers,
// log-domain modified Bessel I, adaptive quadrature, and the tail/p-value
// functions the statistical tests need.

#include <cstdint>
#include <functional>

namespace gslab {

double normal_cdf(double x);        // Phi
double normal_sf(double x);         // complementary Phi
double normal_sf_inv(double p);     // inverse of normal_sf, p in (0,1)

// log I_k(x) for integer k >= 0, x >= 0, without overflow; relative accuracy
// ~1e-12 on the log scale.  Power series for small/moderate x, Hankel
// asymptotic expansion for large x.
double log_bessel_i(std::uint64_t k, double x);

// Adaptive Gauss-Kronrod integration of f over [a, b] to the given relative
// tolerance (absolute near zero results).
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol);

// Survival function of the Kolmogorov statistic's limit law at t = sqrt(n)*D.
double kolmogorov_sf(double t);

// Upper tail of the chi-square distribution with df degrees of freedom.
double chi_square_sf(double x, double df);

}  // namespace gslab

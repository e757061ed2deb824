// Test-side oracles, implemented independently of the library code paths
// they check.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace oracles {

// chi-square critical values at the 0.1% significance level
inline constexpr double kChi2_999_df63 = 103.44237731987324;
inline constexpr double kChi2_999_df15 = 37.69729821835383;

// direct-series wrapped Gaussian, |k| <= 50 terms in long double
double wg_pdf_series(double x, double mean, double sigma);

// exhaustive 3-D grid minimization of the first-order ratio at n points per
// phase axis (default 720)
double q_first_grid(double sigma, int n = 720);

// exhaustive reduced-dimension grid oracle for ell_c = 2: one phase fixed by
// shift invariance, 4 free phases on an n-point midpoint grid, denominator
// marginalized with its own breakpoint-split composite Gauss-Legendre rule
double q_second_grid(double sigma, double r2, double delta_phi_bar, int n = 72,
                     int threads = 2);

// reduced-resolution exhaustive oracle for ell_c = 3 (weights r = {1, r2, r3})
// with a short local descent polish on its own objective
double q_third_order(double sigma, double r2, double r3, int n = 10);

// Pearson chi-square statistic for observed counts vs expected probabilities
double chi2_statistic(std::span<const std::uint64_t> counts,
                      std::span<const double> expected_probability,
                      std::uint64_t total);

// circular (Fisher-Lee) correlation coefficient between two angle samples
double circular_correlation(std::span<const double> a,
                            std::span<const double> b);

}  // namespace oracles

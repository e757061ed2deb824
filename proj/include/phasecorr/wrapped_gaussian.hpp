#pragma once

#include <span>
#include <vector>

#include "phasecorr/angle.hpp"
#include "phasecorr/rng.hpp"

namespace phasecorr {

// Mean and standard deviation of a wrapped Gaussian on (-pi, pi].
struct WGParams {
  double mean = 0.0;   // any real; reduced mod 2pi on use
  double sigma = 0.0;  // radians, >= 0
  void validate() const;
};

// Number of series terms per side: the omitted Gaussian tail beyond 8 sigma
// is below 1.3e-16 of total mass, so truncation stays under the 1e-12
// tolerances used throughout.
int wg_series_halfwidth(double sigma);

// Density of the wrapped Gaussian at x. sigma = 0 is a Dirac delta, not a
// density, and raises std::domain_error.
double wg_pdf(Angle x, const WGParams& p);

// log density with the series evaluated in shifted form; safe for small sigma
// where the direct sum underflows.
double wg_log_pdf(Angle x, const WGParams& p);

// Same, centered at zero; the hot path used by the q solver.
double wg_log_pdf_centered(double x_wrapped, double sigma);

// Prepared evaluator for repeated log-density calls at one sigma: caches the
// series coefficients and, in the Fourier branch, builds cos(m x) by
// recurrence from a single cos. Matches wg_log_pdf_centered to ~1e-15.
class WgLogEval {
 public:
  explicit WgLogEval(double sigma);
  double operator()(double x_wrapped) const;

 private:
  double sigma_ = 1.0;
  double inv_s_ = 1.0;
  double log_norm_ = 0.0;   // log(1/(sigma sqrt(2 pi))), direct branch
  bool fourier_ = false;
  int terms_ = 0;
  double coef_[12] = {};    // fourier: 2 e^{-m^2 s^2/2}; direct: e^{-c_k^2/2s^2}
};

// Draw one variate: Gaussian(mean, sigma) reduced into (-pi, pi]. Valid for
// sigma = 0 (returns the reduced mean).
Angle wg_sample(const WGParams& p, RngState& rng);

struct CircularMoment {
  double resultant_length = 0.0;  // |<e^{j phi}>| in [0, 1]
  Angle mean_angle;               // arg <e^{j phi}>
};

CircularMoment circular_moment(std::span<const Angle> samples);

}  // namespace phasecorr

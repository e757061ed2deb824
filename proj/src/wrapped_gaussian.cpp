#include "phasecorr/wrapped_gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phasecorr {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}

void WGParams::validate() const {
  if (!std::isfinite(mean) || !std::isfinite(sigma))
    throw std::invalid_argument("WGParams: non-finite parameter");
  if (sigma < 0.0) throw std::invalid_argument("WGParams: sigma must be >= 0");
}

int wg_series_halfwidth(double sigma) {
  return std::max(3, static_cast<int>(std::ceil((8.0 * sigma + kPi) / kTwoPi)));
}

double wg_pdf(Angle x, const WGParams& p) {
  p.validate();
  if (p.sigma == 0.0)
    throw std::domain_error(
        "wg_pdf: sigma = 0 is a Dirac delta, not a density");
  const double d = wrap_angle(x.value() - p.mean);
  const int K = wg_series_halfwidth(p.sigma);
  const double inv_s = 1.0 / p.sigma;
  double sum = 0.0;
  for (int k = -K; k <= K; ++k) {
    const double z = (d + kTwoPi * k) * inv_s;
    sum += std::exp(-0.5 * z * z);
  }
  return sum * kInvSqrt2Pi * inv_s;
}

double wg_log_pdf_centered(double x_wrapped, double sigma) {
  if (sigma >= 1.5) {
    // Poisson-summation dual: 1/(2pi) (1 + 2 sum_m e^{-m^2 s^2/2} cos(m x));
    // agrees with the direct series to < 1e-15 and needs only a few terms.
    double f = 1.0;
    const double lq = -0.5 * sigma * sigma;
    for (int m = 1; m * sigma <= 8.5; ++m)
      f += 2.0 * std::exp(lq * m * m) * std::cos(m * x_wrapped);
    return std::log(f / kTwoPi);
  }
  const int K = wg_series_halfwidth(sigma);
  const double inv_s = 1.0 / sigma;
  // shifted sum: the k = 0 image dominates after wrapping, so exponents are
  // taken relative to it to avoid underflow at small sigma
  const double z0 = x_wrapped * inv_s;
  const double lead = -0.5 * z0 * z0;
  double sum = 0.0;
  for (int k = -K; k <= K; ++k) {
    const double z = (x_wrapped + kTwoPi * k) * inv_s;
    sum += std::exp(-0.5 * z * z - lead);
  }
  return lead + std::log(sum) + std::log(kInvSqrt2Pi * inv_s);
}

WgLogEval::WgLogEval(double sigma) : sigma_(sigma), inv_s_(1.0 / sigma) {
  log_norm_ = std::log(kInvSqrt2Pi * inv_s_);
  if (sigma >= 1.5) {
    fourier_ = true;
    const double lq = -0.5 * sigma * sigma;
    int m = 1;
    for (; m * sigma <= 8.5 && m < 12; ++m)
      coef_[m - 1] = 2.0 * std::exp(lq * m * m);
    terms_ = m - 1;
  } else {
    // direct images at offsets 2 pi k; for sigma < 1.5 only |k| <= 2 carry
    // weight above 1e-18 relative on the wrapped domain
    terms_ = 2;
    for (int k = 1; k <= terms_; ++k) {
      const double c = kTwoPi * k * inv_s_;
      coef_[k - 1] = -0.5 * c * c;  // log of the Gaussian image prefactor
    }
  }
}

double WgLogEval::operator()(double x_wrapped) const {
  if (fourier_) {
    const double c1 = std::cos(x_wrapped);
    double f = 1.0 + coef_[0] * c1;
    double cm1 = 1.0, cm = c1;
    for (int m = 2; m <= terms_; ++m) {
      const double cnext = 2.0 * c1 * cm - cm1;  // cos(m x) recurrence
      cm1 = cm;
      cm = cnext;
      f += coef_[m - 1] * cm;
    }
    return std::log(f / kTwoPi);
  }
  const double z0 = x_wrapped * inv_s_;
  const double lead = -0.5 * z0 * z0;
  double sum = 1.0;
  for (int k = 1; k <= terms_; ++k) {
    // e^{-(x + 2 pi k)^2 / 2 s^2} relative to the k = 0 image
    const double cross = kTwoPi * k * inv_s_ * z0;
    sum += std::exp(coef_[k - 1] - cross) + std::exp(coef_[k - 1] + cross);
  }
  return lead + std::log(sum) + log_norm_;
}

double wg_log_pdf(Angle x, const WGParams& p) {
  p.validate();
  if (p.sigma == 0.0)
    throw std::domain_error(
        "wg_log_pdf: sigma = 0 is a Dirac delta, not a density");
  return wg_log_pdf_centered(wrap_angle(x.value() - p.mean), p.sigma);
}

Angle wg_sample(const WGParams& p, RngState& rng) {
  p.validate();
  if (p.sigma == 0.0) return Angle(p.mean);
  return Angle(p.mean + p.sigma * rng.normal());
}

CircularMoment circular_moment(std::span<const Angle> samples) {
  if (samples.empty())
    throw std::invalid_argument("circular_moment: empty sample list");
  double c = 0.0, s = 0.0;
  for (const Angle& a : samples) {
    c += std::cos(a.value());
    s += std::sin(a.value());
  }
  c /= static_cast<double>(samples.size());
  s /= static_cast<double>(samples.size());
  CircularMoment m;
  m.resultant_length = std::hypot(c, s);
  m.mean_angle = Angle(std::atan2(s, c));
  return m;
}

}  // namespace phasecorr

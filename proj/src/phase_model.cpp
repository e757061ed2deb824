#include "phasecorr/phase_model.hpp"

#include <cmath>

namespace phasecorr {

void CorrelationModel::validate() const {
  if (ell_c < 1)
    throw std::invalid_argument("CorrelationModel: ell_c must be >= 1");
  if (r.size() != static_cast<std::size_t>(ell_c))
    throw std::invalid_argument("CorrelationModel: r must have ell_c entries");
  if (r[0] != 1.0)
    throw std::invalid_argument("CorrelationModel: r[0] (lag 1) must be 1");
  for (double w : r)
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("CorrelationModel: weights must be >= 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("CorrelationModel: sigma must be >= 0");
}

Angle combine_h(std::span<const Angle> prev_oldest_first,
                std::span<const double> r) {
  if (prev_oldest_first.size() != r.size() || r.empty())
    throw std::invalid_argument("combine_h: phase/weight length mismatch");
  const std::size_t n = r.size();
  double re = 0.0, im = 0.0, wsum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    // r[k] weights the phase k lags back, i.e. prev[n-1-k]
    const double w = r[k];
    const double ph = prev_oldest_first[n - 1 - k].value();
    re += w * std::cos(ph);
    im += w * std::sin(ph);
    wsum += std::abs(w);
  }
  if (std::hypot(re, im) < 1e-14 * wsum || wsum == 0.0)
    throw degenerate_resultant_error(
        "combine_h: residual amplitudes cancel; combined phase undefined");
  return Angle(std::atan2(im, re));
}

double conditional_log_pdf(Angle phi_i,
                           std::span<const Angle> prev_oldest_first,
                           const CorrelationModel& m) {
  m.validate();
  if (prev_oldest_first.size() != static_cast<std::size_t>(m.ell_c))
    throw std::invalid_argument("conditional_pdf: prev must have ell_c phases");
  const Angle center = combine_h(prev_oldest_first, m.r) + m.delta_phi_bar;
  return wg_log_pdf(phi_i, WGParams{center.value(), m.sigma});
}

double conditional_pdf(Angle phi_i, std::span<const Angle> prev_oldest_first,
                       const CorrelationModel& m) {
  return std::exp(conditional_log_pdf(phi_i, prev_oldest_first, m));
}

PhaseSequence generate_sequence(const CorrelationModel& m, std::size_t n,
                                RngState& rng, std::size_t warmup) {
  m.validate();
  if (n < 1) throw std::invalid_argument("generate_sequence: n must be >= 1");
  if (warmup == static_cast<std::size_t>(-1))
    warmup = 10 * static_cast<std::size_t>(m.ell_c);

  const std::size_t lc = static_cast<std::size_t>(m.ell_c);
  std::vector<Angle> window(lc);
  for (auto& a : window) a = Angle(rng.uniform(-kPi, kPi));

  PhaseSequence out;
  out.phases.reserve(n);
  out.model = m;
  const WGParams noise{m.delta_phi_bar.value(), m.sigma};
  for (std::size_t i = 0; i < warmup + n; ++i) {
    Angle next;
    try {
      const Angle center = combine_h(window, m.r);
      next = center + wg_sample(noise, rng);
    } catch (const degenerate_resultant_error&) {
      // no coherent component left in the cavity: the next phase is uniform
      next = Angle(rng.uniform(-kPi, kPi));
    }
    window.erase(window.begin());
    window.push_back(next);
    if (i >= warmup) out.phases.push_back(next);
  }
  return out;
}

}  // namespace phasecorr

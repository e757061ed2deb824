#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "phasecorr/angle.hpp"
#include "phasecorr/rng.hpp"
#include "phasecorr/wrapped_gaussian.hpp"

namespace phasecorr {

// Raised when a residual-amplitude sum cancels exactly: the combined phase is
// undefined there. Callers in Monte-Carlo loops count and handle such rounds.
struct degenerate_resultant_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Generative model of the phase process: correlation length, residual
// amplitude weights (r[0] belongs to lag 1 and is fixed to 1), and the
// per-round noise parameters.
struct CorrelationModel {
  int ell_c = 1;
  std::vector<double> r = {1.0};  // r[k] = weight of phi_{i-1-k}
  Angle delta_phi_bar;
  double sigma = 0.0;
  void validate() const;
};

struct PhaseSequence {
  std::vector<Angle> phases;  // one per modulation period, canonical
  std::uint64_t seed = 0;
  std::optional<CorrelationModel> model;  // absent for external sequences
};

// arg(sum_n r_n e^{j phi_n}) over the previous ell_c phases.
//
// Ordering convention, used project-wide: `prev` is oldest-first, and r[0]
// weights the most recent entry prev.back(). Raises
// degenerate_resultant_error on (near-)exact cancellation.
Angle combine_h(std::span<const Angle> prev_oldest_first,
                std::span<const double> r);

// f(phi_i | prev) = wg_pdf(phi_i; combine_h(prev, r) + delta_phi_bar, sigma).
double conditional_pdf(Angle phi_i, std::span<const Angle> prev_oldest_first,
                       const CorrelationModel& m);
double conditional_log_pdf(Angle phi_i,
                           std::span<const Angle> prev_oldest_first,
                           const CorrelationModel& m);

// Iterates phi_i = combine_h(prev) + delta_phi mod 2pi from a uniform i.i.d.
// start, discarding `warmup` rounds (default: 10 * ell_c, enough for the
// chain to forget the uniform initialization). A degenerate-resultant round
// has no coherent component left, so it draws a uniform phase.
PhaseSequence generate_sequence(const CorrelationModel& m, std::size_t n,
                                RngState& rng,
                                std::size_t warmup = static_cast<std::size_t>(-1));

}  // namespace phasecorr

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phasecorr/angle.hpp"
#include "phasecorr/phase_model.hpp"

namespace phasecorr {

// Single-mode coherent pulse amplitude; intensity is |alpha|^2 in photon
// number units.
struct CoherentAmplitude {
  double re = 0.0;
  double im = 0.0;

  static CoherentAmplitude from_polar(double intensity, double phase);
  [[nodiscard]] double intensity() const noexcept { return re * re + im * im; }
  [[nodiscard]] double phase() const noexcept;

  CoherentAmplitude operator+(CoherentAmplitude o) const noexcept {
    return {re + o.re, im + o.im};
  }
  CoherentAmplitude operator-(CoherentAmplitude o) const noexcept {
    return {re - o.re, im - o.im};
  }
  CoherentAmplitude scaled(double a) const noexcept { return {a * re, a * im}; }
};

enum class Topology { mzi, cascade, feedback };

std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);

// Interferometer layout and settings. Attenuators are power transmittances on
// the delayed arms:
//   cascade:  attenuators[k-2] = A_k on the arm delayed by k*T, k = 2..ell_c
//   feedback: attenuators[0] = A_2 on the 2T arm, attenuators[1] = loop
//             transmittance t applied per circulation
// The undelayed arm carries the phase shifter. Splitters are 50:50 lossless;
// the input tree uses the balanced division that makes all effective cascade
// weights equal at unit attenuation (for ell_c = 2 this is the 1/2, 1/4, 1/4
// split), so r'_k = sqrt(A_k mu_{i-k} / mu_{i-1}).
struct NetworkConfig {
  Topology topology = Topology::mzi;
  int ell_c = 1;
  Angle phase_shift;
  std::vector<double> attenuators;
  double splitter_ratio = 0.5;           // only 50:50 supported in v1
  std::vector<double> input_intensities; // per round; empty = constant
  double constant_intensity = 1.0;
  double ubs_ratio = 0.9;                // feedback chi monitor tap (90:10)

  void validate() const;
  // Input-tree power fraction delivered to the arm delayed by k*T (k = 0
  // is the undelayed arm), before attenuation.
  double arm_fraction(int k) const;
};

// Per-round detector readout. mu_prime lists the arm intensities oldest-first
// (feedback appends the released loop intensity); mu_xi lists the monitor
// ports (feedback appends the newly stored loop intensity), so that
// mu_beta1 + mu_beta2 + sum(mu_xi) == sum(mu_prime) exactly.
struct DetectionRecord {
  std::int64_t round_index = 0;
  double mu_beta1 = 0.0;
  double mu_beta2 = 0.0;
  std::vector<double> mu_xi;
  std::vector<double> mu_prime;
  bool warmup = false;
};

// 50:50 lossless splitter: sum = (a+b)/sqrt2, diff = (b-a)/sqrt2, with `a`
// the older pulse.
struct BeamsplitPorts {
  CoherentAmplitude sum_port;
  CoherentAmplitude diff_port;
};
BeamsplitPorts beamsplit(CoherentAmplitude a, CoherentAmplitude b);

// Iterated cascade combination of the delayed arms (oldest-first), including
// the per-splitter 1/sqrt2 factors.
CoherentAmplitude chi_state(std::span<const CoherentAmplitude> arms_oldest_first);

std::vector<DetectionRecord> run_network(const NetworkConfig& cfg,
                                         const PhaseSequence& phases);
std::vector<DetectionRecord> run_network(const NetworkConfig& cfg,
                                         std::span<const Angle> phases,
                                         std::span<const double> intensities);

}  // namespace phasecorr

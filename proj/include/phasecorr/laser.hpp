#pragma once

#include <cstdint>
#include <vector>

#include "phasecorr/angle.hpp"
#include "phasecorr/phase_model.hpp"
#include "phasecorr/rng.hpp"

namespace phasecorr {

struct integration_diverged_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rate-equation parameters (SI units internally; recombination rates in 1/s).
struct LaserParams {
  double g_n = 0.0;     // differential gain (1/s per carrier)
  double n_t = 0.0;     // carriers at transparency
  double epsilon = 0.0; // nonlinear gain coefficient (per photon number)
  double tau_p = 0.0;   // photon lifetime (s)
  double beta = 0.0;    // spontaneous emission coupling fraction
  double alpha = 0.0;   // linewidth enhancement factor
  double rec_a = 0.0;   // non-radiative recombination (1/s)
  double rec_b = 0.0;   // spontaneous recombination (1/s)
  double rec_c = 0.0;   // Auger recombination (1/s)
  double q_e = 1.602176634e-19;  // electron charge (C)

  void validate() const;
  // Discrete-mode laser parameter set used for all table sweeps.
  static LaserParams dml_defaults();
};

// Square-wave drive: I_on during `duty` of the period, I_off for the rest.
struct DriveWaveform {
  double nu = 1e9;      // repetition rate (Hz)
  double i_on = 0.0;    // A
  double i_off = 0.0;   // A
  double duty = 0.5;
  void validate() const;
};

struct PulseSample {
  std::int64_t period_index = 0;
  double t = 0.0;        // time of peak |E|^2 within the on-window (s)
  double e_re = 0.0;
  double e_im = 0.0;
  double intensity = 0.0;  // |E|^2 (photon number)
  bool lased = true;       // peak above the no-lasing floor
};

// Decimated trajectory plus full-resolution per-period peaks.
struct FieldTrajectory {
  double dt = 0.0;
  std::uint64_t seed = 0;
  int decimation = 1;
  std::vector<double> t;      // decimated sample times
  std::vector<double> e_re;
  std::vector<double> e_im;
  std::vector<double> n;      // carrier numbers
  std::vector<PulseSample> period_peaks;
  std::uint64_t total_steps = 0;
  std::uint64_t clamped_steps = 0;  // carrier clamps to N = 0
  LaserParams params;
  DriveWaveform drive;
};

struct IntegrateOptions {
  int decimation = 0;        // 0 = choose so that <= ~2e5 samples are stored
  double noise_scale = 1.0;  // 0 disables the Langevin terms
  std::uint64_t seed_label = 0;  // recorded in the trajectory for provenance
};

double threshold_carriers(const LaserParams& p);
double threshold_current(const LaserParams& p);

// Euler-Maruyama integration of the stochastic rate equations. The complex
// field noise has <xi xi*> = delta(t-t') (each quadrature gets variance dt/2)
// and the carrier noise is unit-delta, with the field draws shared between
// the two equations. Carriers clamp at zero with the event counted; more
// than 0.01% clamped steps raises integration_diverged_error.
FieldTrajectory integrate(const LaserParams& p, const DriveWaveform& d,
                          double duration, double dt, RngState& rng,
                          const IntegrateOptions& opts = {});

struct PulseTrain {
  PhaseSequence phases;             // one canonical phase per lasing pulse
  std::vector<double> intensities;  // peak |E|^2 per pulse
  std::vector<bool> warmup;         // startup-transient flags
  std::size_t n_skipped = 0;        // periods below the lasing floor
};

// Samples each period at the peak intensity instant within the on-window.
// Periods whose peak falls below `floor_fraction` of the maximum peak are
// flagged (not silently included); the first extracted pulse is flagged as
// startup warmup.
PulseTrain extract_pulses(const FieldTrajectory& traj, const DriveWaveform& d,
                          double floor_fraction = 1e-6);

}  // namespace phasecorr

#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "phasecorr/angle.hpp"
#include "phasecorr/optics.hpp"

namespace phasecorr {

struct VisibilityEstimate {
  double value = 0.0;          // in [-1, 1] up to statistical error
  double standard_error = 0.0;
  std::size_t n_rounds = 0;
  std::size_t n_skipped = 0;   // rounds dropped by the denominator guard
};

// Standard first-order visibility from mean intensities at the two shifter
// settings: V = (I_max - I_min) / (I_max + I_min), I = mean mu_beta1.
VisibilityEstimate visibility_first_order(
    std::span<const DetectionRecord> at_phi_max,
    std::span<const DetectionRecord> at_phi_min);

// Generalized per-round visibility statistic
//   cos = (2 mu_b1 + sum mu_xi - sum mu') / (2 sqrt(mu'_i (sum_{n<i} mu' - sum mu_xi)))
// averaged over rounds; near-degenerate denominators are skipped and counted.
VisibilityEstimate v_statistic(std::span<const DetectionRecord> records,
                               const NetworkConfig& cfg);

struct SweepSettings {
  Angle phi;
  std::vector<double> attenuators;
};

struct SweepPoint {
  SweepSettings settings;
  VisibilityEstimate v;
};

struct SweepGrid {
  int phi_points = 64;
  int a_points = 32;                   // per attenuator axis
  double a_min = 0.0;
  double a_max = 1.0;
  int refine_factor = 3;               // one local pass, this much finer
};

struct CalibrationResult {
  double sigma_hat = 0.0;              // +inf when fully randomized
  std::vector<double> r_hat;           // r_hat[k-2] estimates r_{i-k}
  Angle delta_phi_bar_hat;
  VisibilityEstimate v_max;
  SweepSettings settings_max;
  std::vector<SweepPoint> sweep;       // evaluated (settings -> v) table
  bool fully_randomized = false;       // v_max <= 0
};

// Evaluates v_statistic over the settings grid (the supplier must replay the
// same pulse train at every grid point -- common random numbers), locates the
// maximum, runs one refinement pass around it, and inverts the closed forms
// sigma = sqrt(-2 ln v_max), delta_phi_bar = -phi_max,
// r_{i-k} = sqrt(A_max,k mu_{i-k}/mu_{i-1}).
using RecordSupplier =
    std::function<std::vector<DetectionRecord>(const NetworkConfig&)>;

CalibrationResult calibrate(const RecordSupplier& supplier,
                            const NetworkConfig& base_cfg,
                            const SweepGrid& grid);

}  // namespace phasecorr

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "phasecorr/angle.hpp"
#include "phasecorr/phase_model.hpp"
#include "phasecorr/quadrature.hpp"

namespace phasecorr {

struct budget_exhausted_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverStats {
  std::uint64_t evaluations = 0;       // objective evaluations (grid + refine)
  int grid_resolution = 0;             // coarse-grid points per free dimension
  int refinement_iterations = 0;
  double error_bound = 0.0;            // quadrature-doubling check at argmin
  bool best_effort = false;            // ell_c >= 3: minimum not certified
};

struct QResult {
  double q = 0.0;                    // in [0, 1]
  std::vector<Angle> argmin_phases;  // (phi_{i-lc}, ..., phi_{i+lc}), first = 0
  SolverStats solver_stats;
};

struct QSolverOptions {
  int grid_points = 36;        // per free dimension after the shift reduction
  int multistart = 8;
  int threads = 0;             // 0 = hardware concurrency
  std::uint64_t budget = 0;    // 0 = unlimited; counts coarse-grid evaluations
};

// q for ell_c = 1: the denominator is the closed-form wrapped Gaussian with
// std sqrt(2) sigma1, so no quadrature is needed.
QResult q_first_order(double sigma1, Angle delta_phi_bar,
                      const QuadratureSpec& quad = {},
                      const QSolverOptions& opts = {});

// q for ell_c = 2 via the single marginalization integral over the center
// phase; conditional densities follow phase_model::conditional_pdf.
QResult q_second_order(const CorrelationModel& m,
                       const QuadratureSpec& quad = {},
                       const QSolverOptions& opts = {});

// Generic ell_c. For ell_c >= 3 the result is the best minimum found within
// the evaluation budget and is flagged best_effort in the stats.
QResult q_general(const CorrelationModel& m, const QuadratureSpec& quad,
                  std::uint64_t budget, const QSolverOptions& opts = {});

}  // namespace phasecorr

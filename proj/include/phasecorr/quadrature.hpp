#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "phasecorr/angle.hpp"

namespace phasecorr {

// Node budget for the marginalization integral over (-pi, pi].
struct QuadratureSpec {
  int node_count = 512;
  void validate() const {
    if (node_count < 64)
      throw std::invalid_argument("QuadratureSpec: node_count must be >= 64");
  }
};

// Equal-weight midpoint nodes on (-pi, pi]; spectrally accurate for smooth
// periodic integrands.
std::vector<double> periodic_nodes(int n);

struct QuadRule {
  std::vector<double> x;
  std::vector<double> w;
};

// Composite Gauss-Legendre rule over the circle, split at `breakpoints`
// where the integrand is discontinuous or steep (conditional-density centers
// swing by pi where a residual sum degenerates), with panel widths graded
// geometrically down to `layer` next to each breakpoint. `budget` is the
// approximate total node count.
QuadRule panelized_rule(std::span<const double> breakpoints, double layer,
                        int budget);

}  // namespace phasecorr

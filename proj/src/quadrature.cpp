#include "phasecorr/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace phasecorr {

namespace {

// Gauss-Legendre 8-point rule on [-1, 1].
constexpr double kGlX[8] = {
    -0.9602898564975362, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975362};
constexpr double kGlW[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

void append_gl(double lo, double hi, QuadRule& out) {
  const double h = 0.5 * (hi - lo);
  const double c = 0.5 * (hi + lo);
  for (int i = 0; i < 8; ++i) {
    out.x.push_back(c + h * kGlX[i]);
    out.w.push_back(h * kGlW[i]);
  }
}

// Composite GL over [lo, hi] with panel width <= h_base.
void append_composite(double lo, double hi, double h_base, QuadRule& out) {
  const double len = hi - lo;
  if (len <= 0.0) return;
  const int n = std::max(1, static_cast<int>(std::ceil(len / h_base)));
  const double h = len / n;
  for (int i = 0; i < n; ++i) append_gl(lo + i * h, lo + (i + 1) * h, out);
}

}  // namespace

std::vector<double> periodic_nodes(int n) {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    x[static_cast<std::size_t>(i)] = -kPi + kTwoPi * (i + 0.5) / n;
  return x;
}

QuadRule panelized_rule(std::span<const double> breakpoints, double layer,
                        int budget) {
  QuadRule out;
  const double h_base = kTwoPi * 8.0 / std::max(64, budget);

  std::vector<double> bp(breakpoints.begin(), breakpoints.end());
  for (double& b : bp) b = wrap_angle(b);
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end(),
                       [](double a, double b) { return std::abs(a - b) < 1e-12; }),
           bp.end());
  if (bp.empty()) {
    append_composite(-kPi, kPi, h_base, out);
    return out;
  }
  layer = std::clamp(layer, 1e-10, kPi / 8);
  out.x.reserve(1024);
  out.w.reserve(1024);
  // walk the circle between consecutive breakpoints; grade panel edges
  // geometrically toward both ends of every section
  for (std::size_t i = 0; i < bp.size(); ++i) {
    const double lo = bp[i];
    const double hi = (i + 1 < bp.size()) ? bp[i + 1] : bp[0] + kTwoPi;
    const double len = hi - lo;
    if (len < 4e-10) continue;
    const int levels = std::clamp(
        static_cast<int>(std::ceil(std::log2(len / std::min(layer, len / 4)))),
        2, 48);
    std::vector<double> edges;
    edges.push_back(lo);
    for (int k = levels; k >= 2; --k) edges.push_back(lo + len * std::ldexp(1.0, -k));
    for (int k = 2; k <= levels; ++k) edges.push_back(hi - len * std::ldexp(1.0, -k));
    edges.push_back(hi);
    std::sort(edges.begin(), edges.end());
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
      if (edges[e + 1] - edges[e] < 1e-13) continue;
      if (edges[e + 1] - edges[e] <= h_base)
        append_gl(edges[e], edges[e + 1], out);
      else
        append_composite(edges[e], edges[e + 1], h_base, out);
    }
  }
  return out;
}

}  // namespace phasecorr

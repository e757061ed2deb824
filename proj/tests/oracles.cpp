#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace oracles {

namespace {

constexpr double PI = std::numbers::pi;
constexpr double TAU = 2.0 * std::numbers::pi;

double owrap(double x) {
  double r = std::remainder(x, TAU);
  if (r <= -PI) r += TAU;
  return r;
}

// log wrapped-Gaussian centered at zero, direct image sum
double olog_g(double x, double sigma) {
  x = owrap(x);
  const int K = std::max(3, static_cast<int>(std::ceil(8.0 * sigma / TAU)) + 1);
  const double lead = -0.5 * (x / sigma) * (x / sigma);
  double s = 0.0;
  for (int k = -K; k <= K; ++k) {
    const double z = (x + TAU * k) / sigma;
    s += std::exp(-0.5 * z * z - lead);
  }
  return lead + std::log(s / (sigma * std::sqrt(TAU)));
}

// combined-phase angle arg(e^{jy} + r e^{jx}); returns false on degeneracy
bool ocenter(double y, double x, double r, double& out) {
  const double re = std::cos(y) + r * std::cos(x);
  const double im = std::sin(y) + r * std::sin(x);
  if (re * re + im * im < 1e-26 * (1.0 + r) * (1.0 + r)) return false;
  out = std::atan2(im, re);
  return true;
}

struct Rule {
  std::vector<double> x, w;
};

// GL-16 panel on [a, b]
void gl16(double a, double b, Rule& r) {
  static constexpr double X[8] = {
      0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
      0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
      0.9445750230732326, 0.9894009349916499};
  static constexpr double W[8] = {
      0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
      0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
      0.0622535239386479, 0.0271524594117541};
  const double h = 0.5 * (b - a), c = 0.5 * (b + a);
  for (int i = 0; i < 8; ++i) {
    r.x.push_back(c - h * X[i]);
    r.w.push_back(h * W[i]);
    r.x.push_back(c + h * X[i]);
    r.w.push_back(h * W[i]);
  }
}

// circle rule split at two breakpoints, edges graded geometrically (factor 3)
Rule make_rule(double bp1, double bp2, double layer) {
  Rule r;
  double a = owrap(bp1), b = owrap(bp2);
  if (a > b) std::swap(a, b);
  const double sections[2][2] = {{a, b}, {b, a + TAU}};
  for (const auto& sec : sections) {
    const double lo = sec[0], hi = sec[1];
    const double len = hi - lo;
    if (len < 1e-9) continue;
    std::vector<double> edges{lo, hi};
    for (double d = len / 3.0; d > layer; d /= 3.0) {
      edges.push_back(lo + d);
      edges.push_back(hi - d);
    }
    std::sort(edges.begin(), edges.end());
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const double w = edges[i + 1] - edges[i];
      if (w <= 0) continue;
      const int parts = std::max(1, static_cast<int>(std::ceil(w / 0.08)));
      for (int p = 0; p < parts; ++p)
        gl16(edges[i] + w * p / parts, edges[i] + w * (p + 1) / parts, r);
    }
  }
  return r;
}

}  // namespace

double wg_pdf_series(double x, double mean, double sigma) {
  const long double xl = x, ml = mean, sl = sigma;
  const long double tau = 2.0L * 3.14159265358979323846264338327950288L;
  long double sum = 0.0L;
  for (int k = -50; k <= 50; ++k) {
    const long double z = (xl - ml + tau * k) / sl;
    sum += std::exp(-0.5L * z * z);
  }
  return static_cast<double>(
      sum / (sl * std::sqrt(2.0L * 3.14159265358979323846264338327950288L)));
}

double q_first_grid(double sigma, int n) {
  std::vector<double> t1(static_cast<std::size_t>(n)), t2(t1);
  for (int i = 0; i < n; ++i) {
    const double th = -PI + TAU * i / n;
    t1[static_cast<std::size_t>(i)] = olog_g(th, sigma);
    t2[static_cast<std::size_t>(i)] = olog_g(th, std::sqrt(2.0) * sigma);
  }
  // exhaustive over (a, b, c); difference indices stay on the grid
  double best = INFINITY;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const int u = (b - a + n) % n;
      // theta_u + theta_v lands on index (u + v + n/2) mod n
      const int base = u + n / 2;
      const double tu = t1[static_cast<std::size_t>(u)];
      for (int v = 0; v < n; ++v) {
        const double val = tu + t1[static_cast<std::size_t>(v)] -
                           t2[static_cast<std::size_t>((base + v) % n)];
        best = std::min(best, val);
      }
    }
  return TAU * std::exp(best);
}

double q_second_grid(double sigma, double r2, double dpb, int n, int threads) {
  const std::size_t un = static_cast<std::size_t>(n);
  std::vector<double> grid(un);
  for (std::size_t i = 0; i < un; ++i)
    grid[i] = -PI + TAU * (static_cast<double>(i) + 0.5) / n;
  const double layer = std::max(1e-4, std::abs(1.0 - r2) / 4.0);

  // denominator over the center phase, cached on (b, d, e)
  std::vector<double> D(un * un * un, INFINITY);
  auto d_slice = [&](std::size_t b0, std::size_t b1) {
    std::vector<double> f12;
    for (std::size_t ib = b0; ib < b1; ++ib) {
      const double b = grid[ib];
      double hb0;
      if (!ocenter(b, 0.0, r2, hb0)) continue;
      for (std::size_t id = 0; id < un; ++id) {
        const double d = grid[id];
        const Rule rule = make_rule(b + PI, d + PI, layer);
        const std::size_t nw = rule.x.size();
        f12.assign(nw, 0.0);
        for (std::size_t i = 0; i < nw; ++i) {
          const double u = rule.x[i];
          double hu, hd;
          if (!ocenter(u, b, r2, hu) || !ocenter(d, u, r2, hd)) {
            f12[i] = -INFINITY;
            continue;
          }
          f12[i] = olog_g(u - hb0 - dpb, sigma) + olog_g(d - hu - dpb, sigma);
          // stash hd for the e loop by re-deriving below; keep value here
        }
        for (std::size_t ie = 0; ie < un; ++ie) {
          const double e = grid[ie];
          double mx = -INFINITY;
          double acc = 0.0;
          // two passes for the shifted sum
          std::vector<double> vals(nw, -INFINITY);
          for (std::size_t i = 0; i < nw; ++i) {
            if (f12[i] == -INFINITY) continue;
            double hd;
            if (!ocenter(d, rule.x[i], r2, hd)) continue;
            vals[i] = f12[i] + olog_g(e - hd - dpb, sigma);
            mx = std::max(mx, vals[i]);
          }
          if (!std::isfinite(mx)) continue;
          for (std::size_t i = 0; i < nw; ++i)
            if (vals[i] != -INFINITY) acc += rule.w[i] * std::exp(vals[i] - mx);
          D[(ib * un + id) * un + ie] = mx + std::log(acc);
        }
      }
    }
  };
  if (threads > 1) {
    std::vector<std::thread> pool;
    const std::size_t per = (un + threads - 1) / threads;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(d_slice, std::min(un, t * per),
                        std::min(un, (t + 1) * per));
    for (auto& th : pool) th.join();
  } else {
    d_slice(0, un);
  }

  // numerator tables: g1[b][c] = log g(c - H(b,0) - dpb),
  // g2[x][y][z] = log g(z - H(y,x) - dpb)
  std::vector<double> g1(un * un, INFINITY), g2(un * un * un, INFINITY);
  for (std::size_t ib = 0; ib < un; ++ib) {
    double hb0;
    if (!ocenter(grid[ib], 0.0, r2, hb0)) continue;
    for (std::size_t ic = 0; ic < un; ++ic)
      g1[ib * un + ic] = olog_g(grid[ic] - hb0 - dpb, sigma);
  }
  for (std::size_t ix = 0; ix < un; ++ix)
    for (std::size_t iy = 0; iy < un; ++iy) {
      double h;
      if (!ocenter(grid[iy], grid[ix], r2, h)) continue;
      for (std::size_t iz = 0; iz < un; ++iz)
        g2[(ix * un + iy) * un + iz] = olog_g(grid[iz] - h - dpb, sigma);
    }

  double best = INFINITY;
  for (std::size_t ib = 0; ib < un; ++ib)
    for (std::size_t ic = 0; ic < un; ++ic) {
      const double n1 = g1[ib * un + ic];
      if (n1 == INFINITY) continue;
      for (std::size_t id = 0; id < un; ++id) {
        const double n2 = g2[(ib * un + ic) * un + id];
        if (n2 == INFINITY) continue;
        const double* g3 = &g2[(ic * un + id) * un];
        const double* dd = &D[(ib * un + id) * un];
        for (std::size_t ie = 0; ie < un; ++ie) {
          if (g3[ie] == INFINITY || dd[ie] == INFINITY) continue;
          best = std::min(best, n1 + n2 + g3[ie] - dd[ie]);
        }
      }
    }
  return TAU * std::exp(best);
}

namespace {

// direct third-order objective at phases p (p[0] = 0): product of four
// conditionals over the single marginalization integral
double third_objective(const double p[7], double sigma, double r2, double r3,
                       double dpb, int m) {
  auto center3 = [&](double y, double x, double w, double& out) {
    const double re = std::cos(y) + r2 * std::cos(x) + r3 * std::cos(w);
    const double im = std::sin(y) + r2 * std::sin(x) + r3 * std::sin(w);
    if (re * re + im * im < 1e-26) return false;
    out = std::atan2(im, re);
    return true;
  };
  double c0, c1, c2, c3;
  if (!center3(p[2], p[1], p[0], c0) || !center3(p[3], p[2], p[1], c1) ||
      !center3(p[4], p[3], p[2], c2) || !center3(p[5], p[4], p[3], c3))
    return INFINITY;
  const double num = olog_g(p[3] - c0 - dpb, sigma) +
                     olog_g(p[4] - c1 - dpb, sigma) +
                     olog_g(p[5] - c2 - dpb, sigma) +
                     olog_g(p[6] - c3 - dpb, sigma);
  double mx = -INFINITY;
  std::vector<double> vals(static_cast<std::size_t>(m), -INFINITY);
  for (int i = 0; i < m; ++i) {
    const double u = -PI + TAU * (i + 0.5) / m;
    double k0, k1, k2, k3;
    if (!center3(p[2], p[1], p[0], k0) || !center3(u, p[2], p[1], k1) ||
        !center3(p[4], u, p[2], k2) || !center3(p[5], p[4], u, k3))
      continue;
    vals[static_cast<std::size_t>(i)] =
        olog_g(u - k0 - dpb, sigma) + olog_g(p[4] - k1 - dpb, sigma) +
        olog_g(p[5] - k2 - dpb, sigma) + olog_g(p[6] - k3 - dpb, sigma);
    mx = std::max(mx, vals[static_cast<std::size_t>(i)]);
  }
  if (!std::isfinite(mx)) return INFINITY;
  double acc = 0.0;
  for (double v : vals)
    if (v != -INFINITY) acc += std::exp(v - mx);
  const double den = mx + std::log(acc * TAU / m);
  return num - den;
}

}  // namespace

double q_third_order(double sigma, double r2, double r3, int n) {
  struct Cand {
    double value;
    double p[7];
  };
  std::vector<Cand> top;
  double p[7] = {0, 0, 0, 0, 0, 0, 0};
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    grid[static_cast<std::size_t>(i)] = -PI + TAU * (i + 0.5) / n;
  // exhaustive over the six free phases at coarse resolution
  for (double p1 : grid) {
    p[1] = p1;
    for (double p2 : grid) {
      p[2] = p2;
      for (double p3 : grid) {
        p[3] = p3;
        for (double p4 : grid) {
          p[4] = p4;
          for (double p5 : grid) {
            p[5] = p5;
            for (double p6 : grid) {
              p[6] = p6;
              const double v = third_objective(p, sigma, r2, r3, 0.0, 64);
              if (top.size() < 5 || v < top.back().value) {
                Cand c;
                c.value = v;
                std::copy(p, p + 7, c.p);
                top.push_back(c);
                std::sort(top.begin(), top.end(),
                          [](const Cand& a, const Cand& b) {
                            return a.value < b.value;
                          });
                if (top.size() > 5) top.pop_back();
              }
            }
          }
        }
      }
    }
  }
  // local descent polish from each surviving cell, on the oracle's objective
  double best = INFINITY;
  for (auto& cand : top) {
    double cur[7];
    std::copy(cand.p, cand.p + 7, cur);
    double val = third_objective(cur, sigma, r2, r3, 0.0, 384);
    double step = TAU / n;
    while (step > 1e-6) {
      bool improved = false;
      for (int c = 1; c < 7; ++c) {
        for (double dir : {1.0, -1.0}) {
          double trial[7];
          std::copy(cur, cur + 7, trial);
          trial[c] = owrap(trial[c] + dir * step);
          const double v = third_objective(trial, sigma, r2, r3, 0.0, 384);
          if (v < val) {
            val = v;
            std::copy(trial, trial + 7, cur);
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    best = std::min(best, third_objective(cur, sigma, r2, r3, 0.0, 1024));
  }
  return TAU * std::exp(best);
}

double chi2_statistic(std::span<const std::uint64_t> counts,
                      std::span<const double> expected_probability,
                      std::uint64_t total) {
  if (counts.size() != expected_probability.size())
    throw std::invalid_argument("chi2: size mismatch");
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double exp_n = expected_probability[i] * static_cast<double>(total);
    const double d = static_cast<double>(counts[i]) - exp_n;
    stat += d * d / exp_n;
  }
  return stat;
}

double circular_correlation(std::span<const double> a,
                            std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("circular_correlation: bad inputs");
  double ca = 0, sa = 0, cb = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += std::cos(a[i]);
    sa += std::sin(a[i]);
    cb += std::cos(b[i]);
    sb += std::sin(b[i]);
  }
  const double ma = std::atan2(sa, ca), mb = std::atan2(sb, cb);
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = std::sin(owrap(a[i] - ma));
    const double y = std::sin(owrap(b[i] - mb));
    num += x * y;
    da += x * x;
    db += y * y;
  }
  return num / std::sqrt(da * db);
}

}  // namespace oracles

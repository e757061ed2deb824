#include "phasecorr/q_engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

#include "phasecorr/wrapped_gaussian.hpp"

namespace phasecorr {

namespace {

double log_weight_sum_exp(std::span<const double> logv,
                          std::span<const double> w) {
  double mx = -INFINITY;
  for (double v : logv) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return -INFINITY;
  double s = 0.0;
  for (std::size_t i = 0; i < logv.size(); ++i)
    s += w[i] * std::exp(logv[i] - mx);
  return mx + std::log(s);
}

int threads_for(const QSolverOptions& opts) {
  if (opts.threads > 0) return opts.threads;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Deterministic chunked parallel loop: fn(chunk_index, begin, end). Results
// are merged in chunk order afterwards, so output never depends on timing.
void parallel_chunks(std::size_t n, int threads,
                     const std::function<void(int, std::size_t, std::size_t)>& fn) {
  threads = static_cast<int>(
      std::max<std::size_t>(1, std::min<std::size_t>(threads, n ? n : 1)));
  if (threads == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t per = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t b = std::min(n, static_cast<std::size_t>(t) * per);
    const std::size_t e = std::min(n, b + per);
    pool.emplace_back(fn, t, b, e);
  }
  for (auto& th : pool) th.join();
}

// The ratio objective in consecutive-difference coordinates
// u_j = phi_j - phi_{j-1}, j = 1..2*lc, with phi_0 = 0 fixed by the global
// shift invariance. The denominator marginalizes the center phase with a
// breakpoint-aware panel rule: each conditional's center swings by pi in the
// integration variable where its residual-amplitude sum degenerates, and a
// plain fixed-node rule there lets the minimizer chase O(h) quadrature
// artifacts.
class QObjective {
 public:
  QObjective(const CorrelationModel& m, int node_budget)
      : lc_(m.ell_c),
        r_(m.r),
        dpb_(m.delta_phi_bar.value()),
        sigma_(m.sigma),
        budget_(node_budget),
        T_(m.sigma) {}

  int dims() const { return 2 * lc_; }
  int node_budget() const { return budget_; }

  double operator()(std::span<const double> u) const {
    return eval_with_budget(u, budget_);
  }

  double eval_with_budget(std::span<const double> u, int budget) const {
    std::vector<double> p = phases_from_diffs(u);
    return numerator_log(p) - denominator_log(p, budget);
  }

  std::vector<double> phases_from_diffs(std::span<const double> u) const {
    std::vector<double> p(static_cast<std::size_t>(2 * lc_ + 1));
    p[0] = 0.0;
    for (int j = 1; j <= 2 * lc_; ++j)
      p[static_cast<std::size_t>(j)] =
          wrap_angle(p[static_cast<std::size_t>(j - 1)] + u[static_cast<std::size_t>(j - 1)]);
    return p;
  }

  // +infinity at (numerically) degenerate conditioning resultants: q is the
  // infimum over the open set where the conditional centers are defined, and
  // the float value computed exactly on the manifold is rounding noise that
  // can undercut both one-sided limits.
  double numerator_log(std::span<const double> p) const {
    double s = 0.0;
    for (int k = 0; k <= lc_; ++k) {
      const double f =
          factor_log(p, lc_ + k, p[static_cast<std::size_t>(lc_ + k)], false, 0.0);
      if (f == INFINITY) return INFINITY;
      s += f;
    }
    return s;
  }

  double denominator_log(std::span<const double> p, int budget) const {
    std::vector<double> bps;
    bps.reserve(static_cast<std::size_t>(lc_));
    double layer = kPi / 8;
    for (int k = 1; k <= lc_; ++k) {
      double cre = 0.0, cim = 0.0;
      for (int m = 0; m < lc_; ++m) {
        if (m == k - 1) continue;
        const double ph = p[static_cast<std::size_t>(lc_ + k - 1 - m)];
        cre += r_[static_cast<std::size_t>(m)] * std::cos(ph);
        cim += r_[static_cast<std::size_t>(m)] * std::sin(ph);
      }
      const double mag = std::hypot(cre, cim);
      const double rw = r_[static_cast<std::size_t>(k - 1)];
      if (mag == 0.0 && rw == 0.0) continue;
      bps.push_back(wrap_angle(kPi + std::atan2(cim, cre) -
                               p[static_cast<std::size_t>(lc_ - 1)]));
      // the center-swing layer next to the breakpoint has width ~ |mag - rw|;
      // an exact magnitude match passes through zero with bounded slope, so
      // only the jump itself needs a panel edge there
      const double gap = std::abs(mag - rw);
      layer = std::min(layer, gap < 1e-7 ? 2e-2 : std::max(1e-7, gap / 4));
    }
    const QuadRule rule = panelized_rule(bps, layer, budget);
    std::vector<double> logv(rule.x.size());
    integrand_log(p, rule.x, logv);
    return log_weight_sum_exp(logv, rule.w);
  }

  // flat-midpoint denominator used during coarse-grid caching; `p` needs the
  // entries other than index lc (the integrated phase)
  double denominator_log_flat(std::span<const double> p,
                              std::span<const double> nodes) const {
    std::vector<double> logv(nodes.size());
    integrand_log(p, nodes, logv);
    double mx = -INFINITY;
    for (double v : logv) mx = std::max(mx, v);
    if (!std::isfinite(mx)) return -INFINITY;
    double s = 0.0;
    for (double v : logv) s += std::exp(v - mx);
    return mx + std::log(s * (kTwoPi / static_cast<double>(nodes.size())));
  }

 private:
  void integrand_log(std::span<const double> p, std::span<const double> w,
                     std::span<double> out) const {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double pw =
          wrap_angle(p[static_cast<std::size_t>(lc_ - 1)] + w[i]);
      double li = 0.0;
      for (int k = 0; k <= lc_; ++k) {
        const double outcome =
            (k == 0) ? pw : p[static_cast<std::size_t>(lc_ + k)];
        li += factor_log(p, lc_ + k, outcome, true, pw);
      }
      // a node exactly on a degenerate manifold carries no usable value;
      // dropping it perturbs the integral by at most weight * max density
      out[i] = std::isfinite(li) ? li : -INFINITY;
    }
  }

  // log f(outcome | window ending at phase index end-1); when `patch` is set,
  // phase index lc reads `pw` instead of p[lc]. Returns +inf on a degenerate
  // resultant (numerator path rejects the point).
  double factor_log(std::span<const double> p, int end, double outcome,
                    bool patch, double pw) const {
    double re = 0.0, im = 0.0, wsum = 0.0;
    for (int m = 0; m < lc_; ++m) {
      const int idx = end - 1 - m;
      const double ph =
          (patch && idx == lc_) ? pw : p[static_cast<std::size_t>(idx)];
      const double w = r_[static_cast<std::size_t>(m)];
      re += w * std::cos(ph);
      im += w * std::sin(ph);
      wsum += w;
    }
    if (re * re + im * im < 1e-26 * wsum * wsum) return INFINITY;
    const double center = std::atan2(im, re);
    return T_(wrap_angle(outcome - center - dpb_));
  }

  int lc_;
  std::vector<double> r_;
  double dpb_;
  double sigma_;
  int budget_;
  WgLogEval T_;
};

// First-order objective: the denominator is the closed-form convolution of
// two wrapped Gaussians (std sqrt(2) sigma), no quadrature.
class QFirstObjective {
 public:
  QFirstObjective(double sigma, double dpb)
      : dpb_(dpb), T1_(sigma), T2_(std::numbers::sqrt2 * sigma) {}
  double operator()(std::span<const double> u) const {
    const double n1 = T1_(wrap_angle(u[0] - dpb_));
    const double n2 = T1_(wrap_angle(u[1] - dpb_));
    const double d = T2_(wrap_angle(u[0] + u[1] - 2 * dpb_));
    return n1 + n2 - d;
  }

 private:
  double dpb_;
  WgLogEval T1_;
  WgLogEval T2_;
};

struct GridBest {
  double value = INFINITY;
  std::vector<double> u;
};

bool better(const GridBest& a, const GridBest& b) {
  return a.value < b.value || (a.value == b.value && a.u < b.u);
}

// Keeps the best well-separated cells (L-inf torus distance >= min_sep) seen
// so far; used to pick multistart seeds for refinement.
class TopCells {
 public:
  TopCells(int k, double min_sep) : cap_(4 * k), min_sep_(min_sep) {}

  double floor_value() const {
    return static_cast<int>(cells_.size()) < cap_ ? INFINITY
                                                  : cells_.back().value;
  }

  void offer(double value, std::span<const double> u) {
    for (auto& c : cells_) {
      if (torus_linf(c.u, u) < min_sep_) {
        if (value < c.value) {
          c.value = value;
          c.u.assign(u.begin(), u.end());
          std::sort(cells_.begin(), cells_.end(), better);
        }
        return;
      }
    }
    cells_.push_back({value, {u.begin(), u.end()}});
    std::sort(cells_.begin(), cells_.end(), better);
    if (static_cast<int>(cells_.size()) > cap_) cells_.resize(cap_);
  }

  void merge(const TopCells& other) {
    for (const auto& c : other.cells_) offer(c.value, c.u);
  }

  std::vector<GridBest> take(int k) {
    std::sort(cells_.begin(), cells_.end(), better);
    if (static_cast<int>(cells_.size()) > k) cells_.resize(static_cast<std::size_t>(k));
    return cells_;
  }

 private:
  static double torus_linf(std::span<const double> a,
                           std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      d = std::max(d, std::abs(wrap_angle(a[i] - b[i])));
    return d;
  }

  int cap_;
  double min_sep_;
  std::vector<GridBest> cells_;
};

// Coordinate descent with shrinking step, torus-aware. Each sweep also tries
// parking a coordinate at the +-pi boundary: minima can sit on the one-sided
// limit of a degenerate-resultant manifold.
template <class F>
GridBest coordinate_descent(const F& obj, GridBest start, double step0,
                            double min_step, std::uint64_t& evals,
                            int& iterations) {
  GridBest cur = std::move(start);
  const int d = static_cast<int>(cur.u.size());
  double step = step0;
  std::vector<double> trial;
  while (step > min_step && iterations < 300) {
    ++iterations;
    const double sweep_start = cur.value;
    bool improved = false;
    for (int c = 0; c < d; ++c) {
      for (double dir : {+1.0, -1.0}) {
        trial = cur.u;
        trial[static_cast<std::size_t>(c)] =
            wrap_angle(cur.u[static_cast<std::size_t>(c)] + dir * step);
        double v = obj(trial);
        ++evals;
        int march = 0;
        while (v < cur.value && march < 64) {
          cur.value = v;
          cur.u = trial;
          improved = true;
          trial[static_cast<std::size_t>(c)] =
              wrap_angle(trial[static_cast<std::size_t>(c)] + dir * step);
          v = obj(trial);
          ++evals;
          ++march;
        }
      }
      if (kPi - std::abs(cur.u[static_cast<std::size_t>(c)]) < 2 * step) {
        for (double b : {kPi - 1e-9, -kPi + 1e-9}) {
          trial = cur.u;
          trial[static_cast<std::size_t>(c)] = b;
          const double v = obj(trial);
          ++evals;
          if (v < cur.value) {
            cur.value = v;
            cur.u = trial;
            improved = true;
          }
        }
      }
    }
    // zigzag guard: a sweep that only shaves rounding-level slivers off the
    // log objective counts as converged at this step size
    if (!improved || sweep_start - cur.value < 1e-11) step *= 0.5;
  }
  return cur;
}

QResult package_result(double best_log, std::span<const double> best_u,
                       SolverStats stats) {
  const double q_raw = kTwoPi * std::exp(best_log);
  if (q_raw > 1.0 + 1e-6)
    throw std::runtime_error("q solver: raw q " + std::to_string(q_raw) +
                             " outside [0, 1 + 1e-6]");
  QResult out;
  out.q = std::clamp(q_raw, 0.0, 1.0);
  out.solver_stats = stats;
  out.argmin_phases.reserve(best_u.size() + 1);
  out.argmin_phases.push_back(Angle(0.0));
  double p = 0.0;
  for (double u : best_u) {
    p = wrap_angle(p + u);
    out.argmin_phases.push_back(Angle(p));
  }
  return out;
}

// Shared driver: scan_slice fills per-thread TopCells over grid slices, then
// the multistart seeds are refined with the exact objective and merged by
// (value, lexicographic argmin).
template <class Exact>
QResult minimize_with_scan(
    const Exact& exact, const QObjective* quad_obj, int n,
    const QSolverOptions& opts,
    const std::function<void(int, TopCells&, std::uint64_t&)>& scan_slice,
    SolverStats stats) {
  const int threads = threads_for(opts);
  const double sep = 3.0 * kTwoPi / n;
  std::vector<TopCells> tops(static_cast<std::size_t>(threads),
                             TopCells(opts.multistart, sep));
  std::vector<std::uint64_t> evals(static_cast<std::size_t>(threads), 0);
  parallel_chunks(static_cast<std::size_t>(n), threads,
                  [&](int t, std::size_t b, std::size_t e) {
                    for (std::size_t i = b; i < e; ++i)
                      scan_slice(static_cast<int>(i),
                                 tops[static_cast<std::size_t>(t)],
                                 evals[static_cast<std::size_t>(t)]);
                  });
  TopCells all(opts.multistart, sep);
  for (auto& t : tops) all.merge(t);
  for (auto e : evals) stats.evaluations += e;

  std::vector<GridBest> starts = all.take(opts.multistart);
  if (starts.empty()) throw std::runtime_error("q solver: empty grid");

  // refine every start coarsely, then run only the best two down to the
  // final step size
  const double h = kTwoPi / n;
  std::vector<GridBest> refined(starts.size());
  std::vector<std::uint64_t> refine_evals(starts.size(), 0);
  std::vector<int> refine_iters(starts.size(), 0);
  parallel_chunks(starts.size(), threads,
                  [&](int, std::size_t b, std::size_t e) {
                    for (std::size_t i = b; i < e; ++i) {
                      GridBest s = starts[i];
                      s.value = exact(s.u);
                      ++refine_evals[i];
                      refined[i] = coordinate_descent(
                          exact, std::move(s), h, 1e-4, refine_evals[i],
                          refine_iters[i]);
                    }
                  });
  std::vector<std::size_t> order(refined.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return better(refined[a], refined[b]);
  });
  const std::size_t deep = std::min<std::size_t>(2, order.size());
  parallel_chunks(deep, threads, [&](int, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const std::size_t j = order[i];
      refined[j] = coordinate_descent(exact, std::move(refined[j]), 2e-4,
                                      1e-8, refine_evals[j], refine_iters[j]);
    }
  });
  GridBest best;
  for (std::size_t i = 0; i < refined.size(); ++i) {
    stats.evaluations += refine_evals[i];
    stats.refinement_iterations += refine_iters[i];
    if (better(refined[i], best)) best = refined[i];
  }
  stats.grid_resolution = n;

  if (quad_obj != nullptr) {
    const double v2 =
        quad_obj->eval_with_budget(best.u, 2 * quad_obj->node_budget());
    stats.error_bound =
        std::abs(kTwoPi * std::exp(v2) - kTwoPi * std::exp(best.value));
    stats.evaluations += 1;
  }
  return package_result(best.value, best.u, stats);
}

int effective_node_budget(const QuadratureSpec& quad, double sigma) {
  quad.validate();
  int budget = quad.node_count;
  if (sigma < 0.2)
    budget = std::max(
        budget, static_cast<int>(std::ceil(64.0 * kTwoPi / sigma)));
  return budget;
}

// Generic coarse grid for any ell_c: the denominator depends on the diffs
// (u_1..u_{lc-1}, s = u_lc + u_{lc+1}, u_{lc+2}..u_{2lc}), so it is cached on
// that reduced lattice with a flat midpoint rule; refinement re-evaluates
// exactly with the panel rule.
QResult minimize_flat(const QObjective& obj, const CorrelationModel& m, int n,
                      const QuadratureSpec& quad, const QSolverOptions& opts,
                      SolverStats stats) {
  const int lc = m.ell_c;
  const int dims = 2 * lc;
  const int kdims = dims - 1;
  const std::vector<double> mid = periodic_nodes(n);
  const double h = kTwoPi / n;
  const int threads = threads_for(opts);
  const std::vector<double> wnodes =
      periodic_nodes(effective_node_budget(quad, m.sigma));

  std::size_t dsize = 1;
  for (int i = 0; i < kdims; ++i) dsize *= static_cast<std::size_t>(n);
  std::vector<double> D(dsize);

  // key layout: (u_1..u_{lc-1}, t, u_{lc+2}..u_{2lc}), t indexing
  // s_t = -pi + t*h (wrapped sums of midpoint values land on that lattice)
  parallel_chunks(dsize, threads, [&](int, std::size_t kb, std::size_t ke) {
    std::vector<int> idx(static_cast<std::size_t>(kdims));
    std::vector<double> p(static_cast<std::size_t>(dims + 1));
    for (std::size_t key = kb; key < ke; ++key) {
      std::size_t rem = key;
      for (int i = kdims - 1; i >= 0; --i) {
        idx[static_cast<std::size_t>(i)] = static_cast<int>(rem % n);
        rem /= static_cast<std::size_t>(n);
      }
      // phases p_0..p_{lc-1} from the leading diffs, p_{lc+1}.. from s and
      // the trailing diffs; p_lc is integrated so its slot is unused
      p[0] = 0.0;
      for (int j = 1; j < lc; ++j)
        p[static_cast<std::size_t>(j)] = wrap_angle(
            p[static_cast<std::size_t>(j - 1)] +
            mid[static_cast<std::size_t>(idx[static_cast<std::size_t>(j - 1)])]);
      const double s =
          -kPi + static_cast<double>(idx[static_cast<std::size_t>(lc - 1)]) * h;
      p[static_cast<std::size_t>(lc + 1)] =
          wrap_angle(p[static_cast<std::size_t>(lc - 1)] + s);
      for (int j = lc + 2; j <= dims; ++j)
        p[static_cast<std::size_t>(j)] = wrap_angle(
            p[static_cast<std::size_t>(j - 1)] +
            mid[static_cast<std::size_t>(idx[static_cast<std::size_t>(j - 2)])]);
      D[key] = obj.denominator_log_flat(p, wnodes);
    }
  });

  std::size_t inner = 1;
  for (int i = 0; i < dims - 1; ++i) inner *= static_cast<std::size_t>(n);

  auto scan = [&](int i1, TopCells& top, std::uint64_t& evals) {
    std::vector<int> idx(static_cast<std::size_t>(dims), 0);
    idx[0] = i1;
    std::vector<double> u(static_cast<std::size_t>(dims));
    std::vector<double> p;
    for (std::size_t c = 0; c < inner; ++c) {
      std::size_t rem = c;
      for (int i = dims - 1; i >= 1; --i) {
        idx[static_cast<std::size_t>(i)] = static_cast<int>(rem % n);
        rem /= static_cast<std::size_t>(n);
      }
      for (int i = 0; i < dims; ++i)
        u[static_cast<std::size_t>(i)] =
            mid[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      // D key: leading lc-1 diffs, then t from the wrapped sum, then trailing
      std::size_t key = 0;
      for (int i = 0; i < lc - 1; ++i)
        key = key * static_cast<std::size_t>(n) +
              static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
      const int t = (idx[static_cast<std::size_t>(lc - 1)] +
                     idx[static_cast<std::size_t>(lc)] + 1) %
                    n;
      key = key * static_cast<std::size_t>(n) + static_cast<std::size_t>(t);
      for (int i = lc + 1; i < dims; ++i)
        key = key * static_cast<std::size_t>(n) +
              static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);

      p = obj.phases_from_diffs(u);
      const double v = obj.numerator_log(p) - D[key];
      ++evals;
      if (v < top.floor_value()) top.offer(v, u);
    }
  };
  return minimize_with_scan(obj, &obj, n, opts, scan, stats);
}

}  // namespace

QResult q_first_order(double sigma1, Angle delta_phi_bar,
                      const QuadratureSpec& quad, const QSolverOptions& opts) {
  if (!(sigma1 > 0.0) || !std::isfinite(sigma1))
    throw std::invalid_argument("q_first_order: sigma1 must be > 0");
  quad.validate();
  const QFirstObjective obj(sigma1, delta_phi_bar.value());
  const int n = opts.grid_points;
  const std::vector<double> mid = periodic_nodes(n);

  auto scan = [&](int i1, TopCells& top, std::uint64_t& evals) {
    std::vector<double> u(2);
    u[0] = mid[static_cast<std::size_t>(i1)];
    for (int i2 = 0; i2 < n; ++i2) {
      u[1] = mid[static_cast<std::size_t>(i2)];
      const double v = obj(u);
      ++evals;
      if (v < top.floor_value()) top.offer(v, u);
    }
  };
  return minimize_with_scan(obj, nullptr, n, opts, scan, SolverStats{});
}

QResult q_second_order(const CorrelationModel& m, const QuadratureSpec& quad,
                       const QSolverOptions& opts) {
  m.validate();
  if (m.ell_c != 2)
    throw std::invalid_argument("q_second_order: model must have ell_c = 2");
  if (!(m.sigma > 0.0))
    throw std::invalid_argument("q_second_order: sigma must be > 0");

  const int budget = effective_node_budget(quad, m.sigma);
  const QObjective obj(m, budget);
  const int n = opts.grid_points;
  const double h = kTwoPi / n;
  const std::vector<double> mid = periodic_nodes(n);
  const double r2 = m.r[1];
  const double dpb = m.delta_phi_bar.value();
  const double sigma = m.sigma;
  (void)sigma;
  const int threads = threads_for(opts);
  const std::size_t un = static_cast<std::size_t>(n);

  auto A = [r2](double x) {
    return std::atan2(r2 * std::sin(x), 1.0 + r2 * std::cos(x));
  };
  const WgLogEval Teval(sigma);
  auto T = [&Teval](double x) { return Teval(wrap_angle(x)); };

  // numerator lookup TN[a][b] = log g(mid_b - A(-mid_a) - dpb)
  std::vector<double> TN(un * un);
  for (std::size_t a = 0; a < un; ++a) {
    const double Aa = A(-mid[a]);
    for (std::size_t b = 0; b < un; ++b) TN[a * un + b] = T(mid[b] - Aa - dpb);
  }

  // denominator cache D[i1][t][i4] with s_t = -pi + t*h; shared panel rule
  // and factor tables per s slice. The cache only ranks grid cells (which sit
  // >= h/2 from any degenerate manifold), so the edge grading can stop early.
  const double layer = std::max(1e-4, std::abs(1.0 - r2) / 4.0);
  std::vector<double> D(un * un * un);
  parallel_chunks(un, threads, [&](int, std::size_t tb, std::size_t te) {
    std::vector<double> F1, F2, F3, logv;
    for (std::size_t t = tb; t < te; ++t) {
      const double s = -kPi + static_cast<double>(t) * h;
      const double bps[2] = {kPi, wrap_angle(s + kPi)};
      const QuadRule rule = panelized_rule(bps, layer, budget);
      const std::size_t nw = rule.x.size();
      F1.assign(un * nw, 0.0);
      F2.assign(nw, 0.0);
      F3.assign(un * nw, 0.0);
      for (std::size_t i = 0; i < nw; ++i) {
        const double w = rule.x[i];
        F2[i] = T(s - w - A(-w) - dpb);
        const double Aws = A(w - s);
        for (std::size_t j = 0; j < un; ++j)
          F3[j * nw + i] = T(mid[j] - Aws - dpb);
      }
      for (std::size_t j = 0; j < un; ++j) {
        const double Aj = A(-mid[j]);
        for (std::size_t i = 0; i < nw; ++i) F1[j * nw + i] = T(rule.x[i] - Aj - dpb);
      }
      logv.assign(nw, 0.0);
      for (std::size_t i1 = 0; i1 < un; ++i1) {
        const double* f1 = &F1[i1 * nw];
        for (std::size_t i4 = 0; i4 < un; ++i4) {
          const double* f3 = &F3[i4 * nw];
          for (std::size_t i = 0; i < nw; ++i) logv[i] = f1[i] + F2[i] + f3[i];
          D[(i1 * un + t) * un + i4] = log_weight_sum_exp(logv, rule.w);
        }
      }
    }
  });

  auto scan = [&](int i1, TopCells& top, std::uint64_t& evals) {
    std::vector<double> u(4);
    const std::size_t s1 = static_cast<std::size_t>(i1);
    u[0] = mid[s1];
    const double* tn1 = &TN[s1 * un];
    for (std::size_t i2 = 0; i2 < un; ++i2) {
      u[1] = mid[i2];
      const double n12 = tn1[i2];
      const double* tn2 = &TN[i2 * un];
      for (std::size_t i3 = 0; i3 < un; ++i3) {
        u[2] = mid[i3];
        const double base = n12 + tn2[i3];
        const std::size_t t = (i2 + i3 + 1) % un;
        const double* drow = &D[(s1 * un + t) * un];
        const double* tn3 = &TN[i3 * un];
        for (std::size_t i4 = 0; i4 < un; ++i4) {
          const double v = base + tn3[i4] - drow[i4];
          ++evals;
          if (v < top.floor_value()) {
            u[3] = mid[i4];
            top.offer(v, u);
          }
        }
      }
    }
  };
  return minimize_with_scan(obj, &obj, n, opts, scan, SolverStats{});
}

QResult q_general(const CorrelationModel& m, const QuadratureSpec& quad,
                  std::uint64_t budget, const QSolverOptions& opts) {
  m.validate();
  if (!(m.sigma > 0.0))
    throw std::invalid_argument("q_general: sigma must be > 0");
  const int dims = 2 * m.ell_c;

  int n = opts.grid_points;
  if (budget > 0) {
    const int fit = static_cast<int>(std::floor(
        std::pow(static_cast<double>(budget), 1.0 / dims)));
    n = std::min(n, fit);
    if (n < 8)
      throw budget_exhausted_error(
          "q_general: evaluation budget " + std::to_string(budget) +
          " cannot cover an 8-point coarse grid in " + std::to_string(dims) +
          " dimensions");
  }
  QSolverOptions o = opts;
  o.grid_points = n;
  const QObjective obj(m, effective_node_budget(quad, m.sigma));
  QResult r = minimize_flat(obj, m, n, quad, o, SolverStats{});
  r.solver_stats.best_effort = (m.ell_c >= 3);
  return r;
}

}  // namespace phasecorr

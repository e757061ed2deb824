#include "phasecorr/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phasecorr {

namespace {

struct MeanVar {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double var_of_mean() const {
    return n > 1 ? m2 / (static_cast<double>(n - 1) * static_cast<double>(n))
                 : 0.0;
  }
};

}  // namespace

VisibilityEstimate visibility_first_order(
    std::span<const DetectionRecord> at_phi_max,
    std::span<const DetectionRecord> at_phi_min) {
  if (at_phi_max.empty() || at_phi_min.empty())
    throw std::invalid_argument("visibility_first_order: empty record set");
  MeanVar a, b;
  for (const auto& r : at_phi_max)
    if (!r.warmup) a.add(r.mu_beta1);
  for (const auto& r : at_phi_min)
    if (!r.warmup) b.add(r.mu_beta1);
  if (a.n == 0 || b.n == 0)
    throw std::invalid_argument("visibility_first_order: only warmup rounds");
  const double tot = a.mean + b.mean;
  if (!(tot > 0.0))
    throw std::runtime_error("visibility_first_order: zero total intensity");
  VisibilityEstimate v;
  v.value = (a.mean - b.mean) / tot;
  v.n_rounds = a.n;
  // delta method; covariance included when the two sets pair round-by-round
  const double ga = 2.0 * b.mean / (tot * tot);
  const double gb = -2.0 * a.mean / (tot * tot);
  double var = ga * ga * a.var_of_mean() + gb * gb * b.var_of_mean();
  if (a.n == b.n && a.n > 1) {
    double cov = 0.0, am = a.mean, bm = b.mean;
    std::size_t k = 0;
    for (std::size_t i = 0; i < at_phi_max.size() && k < a.n; ++i) {
      if (at_phi_max[i].warmup || at_phi_min[i].warmup) continue;
      cov += (at_phi_max[i].mu_beta1 - am) * (at_phi_min[i].mu_beta1 - bm);
      ++k;
    }
    cov /= static_cast<double>(a.n - 1) * static_cast<double>(a.n);
    var += 2.0 * ga * gb * cov;
  }
  v.standard_error = std::sqrt(std::max(0.0, var));
  return v;
}

VisibilityEstimate v_statistic(std::span<const DetectionRecord> records,
                               const NetworkConfig& cfg) {
  cfg.validate();
  if (records.empty())
    throw std::invalid_argument("v_statistic: empty record set");
  const std::size_t want_xi =
      cfg.topology == Topology::feedback
          ? 3
          : static_cast<std::size_t>(cfg.ell_c - 1);
  MeanVar acc;
  std::size_t skipped = 0;
  for (const auto& rec : records) {
    if (rec.warmup) continue;
    if (rec.mu_xi.size() != want_xi)
      throw std::invalid_argument(
          "v_statistic: record arity does not match the network config");
    double sum_prime = 0.0;
    for (double m : rec.mu_prime) sum_prime += m;
    double sum_xi = 0.0;
    for (double m : rec.mu_xi) sum_xi += m;
    const double mu_i = rec.mu_prime.back();  // undelayed arm
    const double denom_sq = mu_i * (sum_prime - mu_i - sum_xi);
    if (denom_sq < 1e-12 * sum_prime * sum_prime) {
      ++skipped;
      continue;
    }
    const double c =
        (2.0 * rec.mu_beta1 + sum_xi - sum_prime) / (2.0 * std::sqrt(denom_sq));
    acc.add(c);
  }
  if (acc.n == 0)
    throw std::runtime_error(
        "v_statistic: every round failed the denominator guard");
  VisibilityEstimate v;
  v.value = acc.mean;
  v.standard_error = std::sqrt(acc.var_of_mean());
  v.n_rounds = acc.n;
  v.n_skipped = skipped;
  return v;
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

// all attenuator combinations over the per-axis value lists
void for_each_combo(const std::vector<std::vector<double>>& axes,
                    const std::function<void(const std::vector<double>&)>& fn) {
  std::vector<double> combo(axes.size());
  std::function<void(std::size_t)> rec = [&](std::size_t d) {
    if (d == axes.size()) {
      fn(combo);
      return;
    }
    for (double v : axes[d]) {
      combo[d] = v;
      rec(d + 1);
    }
  };
  rec(0);
}

bool settings_better(const SweepPoint& a, const SweepPoint& b) {
  if (a.v.value != b.v.value) return a.v.value > b.v.value;
  // ties: smallest |phi|, then lexicographic attenuators
  const double pa = std::abs(a.settings.phi.value());
  const double pb = std::abs(b.settings.phi.value());
  if (pa != pb) return pa < pb;
  return a.settings.attenuators < b.settings.attenuators;
}

}  // namespace

CalibrationResult calibrate(const RecordSupplier& supplier,
                            const NetworkConfig& base_cfg,
                            const SweepGrid& grid) {
  base_cfg.validate();
  if (base_cfg.topology == Topology::feedback)
    throw std::invalid_argument(
        "calibrate: the estimator inversions cover mzi and cascade layouts");
  if (grid.phi_points < 2)
    throw std::invalid_argument("calibrate: phi grid must have >= 2 points");
  const int n_att = base_cfg.ell_c - 1;

  CalibrationResult out;
  auto eval_point = [&](Angle phi, const std::vector<double>& atts) {
    NetworkConfig cfg = base_cfg;
    cfg.phase_shift = phi;
    cfg.attenuators = atts;
    SweepPoint pt;
    pt.settings = {phi, atts};
    pt.v = v_statistic(supplier(cfg), cfg);
    out.sweep.push_back(pt);
    return pt;
  };

  const double hphi = kTwoPi / grid.phi_points;
  std::vector<double> phi_axis(static_cast<std::size_t>(grid.phi_points));
  for (int i = 0; i < grid.phi_points; ++i)
    phi_axis[static_cast<std::size_t>(i)] = -kPi + i * hphi;
  std::vector<std::vector<double>> a_axes(
      static_cast<std::size_t>(n_att),
      linspace(grid.a_min, grid.a_max, grid.a_points));

  SweepPoint best;
  best.v.value = -INFINITY;
  for (double phi : phi_axis) {
    for_each_combo(a_axes, [&](const std::vector<double>& atts) {
      SweepPoint pt = eval_point(Angle(phi), atts);
      if (settings_better(pt, best)) best = pt;
    });
  }

  // one local pass around the best cell, refine_factor times finer
  const double hphi_f = hphi / grid.refine_factor;
  std::vector<double> phi_fine;
  for (int i = -grid.refine_factor; i <= grid.refine_factor; ++i)
    phi_fine.push_back(
        wrap_angle(best.settings.phi.value() + i * hphi_f));
  std::vector<std::vector<double>> a_fine(static_cast<std::size_t>(n_att));
  const double ha =
      grid.a_points > 1
          ? (grid.a_max - grid.a_min) / (grid.a_points - 1)
          : 0.0;
  for (int d = 0; d < n_att; ++d) {
    const double c = best.settings.attenuators[static_cast<std::size_t>(d)];
    for (int i = -grid.refine_factor; i <= grid.refine_factor; ++i) {
      const double v = c + i * ha / grid.refine_factor;
      if (v >= grid.a_min - 1e-12 && v <= grid.a_max + 1e-12)
        a_fine[static_cast<std::size_t>(d)].push_back(
            std::clamp(v, grid.a_min, grid.a_max));
    }
  }
  for (double phi : phi_fine) {
    for_each_combo(a_fine, [&](const std::vector<double>& atts) {
      SweepPoint pt = eval_point(Angle(phi), atts);
      if (settings_better(pt, best)) best = pt;
    });
  }

  out.v_max = best.v;
  out.settings_max = best.settings;
  out.delta_phi_bar_hat = -best.settings.phi;
  if (best.v.value <= 0.0) {
    out.fully_randomized = true;
    out.sigma_hat = std::numeric_limits<double>::infinity();
  } else {
    out.sigma_hat = std::sqrt(-2.0 * std::log(std::min(1.0, best.v.value)));
  }

  // r_hat_{i-k} = sqrt(A_max,k mu_{i-k} / mu_{i-1}) with the mean input
  // intensities recovered from the recorded arm intensities
  if (n_att > 0) {
    NetworkConfig cfg = base_cfg;
    cfg.phase_shift = best.settings.phi;
    cfg.attenuators = best.settings.attenuators;
    const auto records = supplier(cfg);
    std::vector<MeanVar> arm(static_cast<std::size_t>(cfg.ell_c));
    for (const auto& rec : records) {
      if (rec.warmup) continue;
      for (int k = 1; k <= cfg.ell_c; ++k)
        arm[static_cast<std::size_t>(k - 1)].add(
            rec.mu_prime[static_cast<std::size_t>(cfg.ell_c - k)]);
    }
    const double mu1 = arm[0].mean / cfg.arm_fraction(1);
    out.r_hat.resize(static_cast<std::size_t>(n_att));
    for (int k = 2; k <= cfg.ell_c; ++k) {
      const double a_k = best.settings.attenuators[static_cast<std::size_t>(k - 2)];
      const double mu_k = a_k > 0.0
                              ? arm[static_cast<std::size_t>(k - 1)].mean /
                                    (a_k * cfg.arm_fraction(k))
                              : mu1;
      out.r_hat[static_cast<std::size_t>(k - 2)] = std::sqrt(a_k * mu_k / mu1);
    }
  }
  return out;
}

}  // namespace phasecorr

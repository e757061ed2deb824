#include "phasecorr/laser.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace phasecorr {

void LaserParams::validate() const {
  auto pos = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string("LaserParams: ") + name +
                                  " must be > 0");
  };
  pos(g_n, "g_n");
  pos(n_t, "n_t");
  pos(tau_p, "tau_p");
  pos(beta, "beta");
  pos(alpha, "alpha");
  pos(rec_a, "rec_a");
  pos(rec_b, "rec_b");
  pos(rec_c, "rec_c");
  pos(q_e, "q_e");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("LaserParams: epsilon must be >= 0");
}

LaserParams LaserParams::dml_defaults() {
  LaserParams p;
  p.g_n = 1.48e4;
  p.n_t = 1.93e7;
  p.epsilon = 7.73e-8;
  p.tau_p = 2.17e-12;
  p.beta = 5.3e-6;
  p.alpha = 3.0;
  p.rec_a = 2.8e8;
  p.rec_b = 9.8;
  p.rec_c = 3.84e-7;
  return p;
}

void DriveWaveform::validate() const {
  if (!(nu > 0.0)) throw std::invalid_argument("DriveWaveform: nu must be > 0");
  if (!(i_on > i_off) || !(i_off >= 0.0))
    throw std::invalid_argument("DriveWaveform: need i_on > i_off >= 0");
  if (!(duty > 0.0 && duty < 1.0))
    throw std::invalid_argument("DriveWaveform: duty must be in (0, 1)");
}

double threshold_carriers(const LaserParams& p) {
  p.validate();
  return p.n_t + 1.0 / (p.g_n * p.tau_p);
}

double threshold_current(const LaserParams& p) {
  const double n = threshold_carriers(p);
  return p.q_e * (p.rec_a * n + p.rec_b * n * n + p.rec_c * n * n * n);
}

namespace {

// carriers at the below-threshold steady state of the drive floor
double off_state_carriers(const LaserParams& p, double i_off) {
  if (i_off <= 0.0) return 0.0;
  const double target = i_off / p.q_e;
  double lo = 0.0, hi = threshold_carriers(p) * 4.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = p.rec_a * mid + p.rec_b * mid * mid +
                     p.rec_c * mid * mid * mid;
    (r < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

FieldTrajectory integrate(const LaserParams& p, const DriveWaveform& d,
                          double duration, double dt, RngState& rng,
                          const IntegrateOptions& opts) {
  p.validate();
  d.validate();
  if (!(dt > 0.0) || dt > 0.05e-12)
    throw std::invalid_argument(
        "integrate: dt must be in (0, 0.05 ps] for stability");
  const double period = 1.0 / d.nu;
  if (duration < 2.0 * period)
    throw std::invalid_argument("integrate: duration must cover >= 2 periods");

  const std::int64_t steps_per =
      std::max<std::int64_t>(4, std::llround(period / dt));
  const std::int64_t on_steps = std::llround(d.duty * static_cast<double>(steps_per));
  const std::int64_t n_periods = std::llround(duration / period);
  const std::uint64_t total =
      static_cast<std::uint64_t>(n_periods) * static_cast<std::uint64_t>(steps_per);

  FieldTrajectory traj;
  traj.dt = dt;
  traj.seed = opts.seed_label;
  traj.params = p;
  traj.drive = d;
  traj.decimation =
      opts.decimation > 0
          ? opts.decimation
          : std::max<int>(1, static_cast<int>(total / 200000));
  traj.period_peaks.reserve(static_cast<std::size_t>(n_periods));
  const std::size_t keep = static_cast<std::size_t>(
      total / static_cast<std::uint64_t>(traj.decimation) + 2);
  traj.t.reserve(keep);
  traj.e_re.reserve(keep);
  traj.e_im.reserve(keep);
  traj.n.reserve(keep);

  const double inv_tau = 1.0 / p.tau_p;
  const double sq_bb = std::sqrt(p.beta * p.rec_b) * opts.noise_scale;
  const double i_on_rate = d.i_on / p.q_e;
  const double i_off_rate = d.i_off / p.q_e;

  double e1 = 0.0, e2 = 0.0, n = off_state_carriers(p, d.i_off);
  std::uint64_t step = 0;
  for (std::int64_t per = 0; per < n_periods; ++per) {
    PulseSample peak;
    peak.period_index = per;
    peak.intensity = -1.0;
    for (std::int64_t s = 0; s < steps_per; ++s, ++step) {
      const bool on = s < on_steps;
      const double inj = on ? i_on_rate : i_off_rate;
      const double pw = e1 * e1 + e2 * e2;
      if (step % static_cast<std::uint64_t>(traj.decimation) == 0) {
        traj.t.push_back(static_cast<double>(step) * dt);
        traj.e_re.push_back(e1);
        traj.e_im.push_back(e2);
        traj.n.push_back(n);
      }
      if (on && pw > peak.intensity) {
        peak.intensity = pw;
        peak.e_re = e1;
        peak.e_im = e2;
        peak.t = static_cast<double>(step) * dt;
      }
      const double sat = 1.0 + p.epsilon * pw;
      const double gain = p.g_n * (n - p.n_t);
      const double rec = n * (p.rec_a + n * (p.rec_b + n * p.rec_c));
      const double dr = 0.5 * ((gain / sat - inv_tau) * e1 -
                               p.alpha * (gain - inv_tau) * e2);
      const double di = 0.5 * (p.alpha * (gain - inv_tau) * e1 +
                               (gain / sat - inv_tau) * e2);
      const double dn = inj - rec - (gain / sat) * pw;
      // <xi xi*> = delta: each field quadrature gets variance dt/2; the same
      // draws enter the carrier equation (photon-carrier exchange)
      const double w1 = std::sqrt(0.5 * dt) * rng.normal();
      const double w2 = std::sqrt(0.5 * dt) * rng.normal();
      const double wn = std::sqrt(dt) * rng.normal();
      const double ne1 = e1 + dr * dt + sq_bb * n * w1;
      const double ne2 = e2 + di * dt + sq_bb * n * w2;
      double nn = n + dn * dt +
                  opts.noise_scale * std::sqrt(2.0 * (rec + inj)) * wn -
                  2.0 * sq_bb * n * (e1 * w1 + e2 * w2);
      if (!std::isfinite(ne1) || !std::isfinite(ne2) || !std::isfinite(nn))
        throw integration_diverged_error(
            "integrate: state diverged at step " + std::to_string(step));
      if (nn < 0.0) {
        nn = 0.0;
        ++traj.clamped_steps;
      }
      e1 = ne1;
      e2 = ne2;
      n = nn;
    }
    traj.period_peaks.push_back(peak);
  }
  traj.total_steps = total;
  if (traj.clamped_steps * 10000 > total)
    throw integration_diverged_error(
        "integrate: carrier clamping exceeded 0.01% of steps (" +
        std::to_string(traj.clamped_steps) + "/" + std::to_string(total) +
        "); reduce dt");
  return traj;
}

PulseTrain extract_pulses(const FieldTrajectory& traj, const DriveWaveform& d,
                          double floor_fraction) {
  d.validate();
  std::vector<PulseSample> peaks = traj.period_peaks;
  if (peaks.empty()) {
    // rebuild from the stored samples (exact only when decimation == 1)
    const double period = 1.0 / d.nu;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
      const auto per = static_cast<std::int64_t>(traj.t[i] / period);
      const double in_period = traj.t[i] - static_cast<double>(per) * period;
      if (in_period > d.duty * period) continue;
      if (peaks.empty() || peaks.back().period_index != per) {
        peaks.push_back({per, traj.t[i], traj.e_re[i], traj.e_im[i],
                         traj.e_re[i] * traj.e_re[i] +
                             traj.e_im[i] * traj.e_im[i],
                         true});
      } else {
        const double pw =
            traj.e_re[i] * traj.e_re[i] + traj.e_im[i] * traj.e_im[i];
        if (pw > peaks.back().intensity)
          peaks.back() = {per, traj.t[i], traj.e_re[i], traj.e_im[i], pw, true};
      }
    }
  }
  if (peaks.empty())
    throw std::invalid_argument("extract_pulses: trajectory has no periods");

  double max_peak = 0.0;
  for (const auto& pk : peaks) max_peak = std::max(max_peak, pk.intensity);
  const double floor = floor_fraction * max_peak;

  PulseTrain out;
  out.phases.seed = traj.seed;
  out.phases.phases.reserve(peaks.size());
  out.intensities.reserve(peaks.size());
  out.warmup.assign(peaks.size(), false);
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const auto& pk = peaks[i];
    out.phases.phases.push_back(Angle(std::atan2(pk.e_im, pk.e_re)));
    out.intensities.push_back(std::max(0.0, pk.intensity));
    const bool lased = pk.intensity >= floor && pk.intensity > 0.0;
    if (!lased) {
      out.warmup[i] = true;
      ++out.n_skipped;
    }
  }
  if (!out.warmup.empty()) out.warmup[0] = true;  // startup transient
  return out;
}

}  // namespace phasecorr

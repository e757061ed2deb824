#include "phasecorr/optics.hpp"

#include <cmath>
#include <stdexcept>

namespace phasecorr {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
}

CoherentAmplitude CoherentAmplitude::from_polar(double intensity,
                                                double phase) {
  if (!(intensity >= 0.0) || !std::isfinite(intensity))
    throw std::invalid_argument("CoherentAmplitude: intensity must be >= 0");
  const double a = std::sqrt(intensity);
  return {a * std::cos(phase), a * std::sin(phase)};
}

double CoherentAmplitude::phase() const noexcept { return std::atan2(im, re); }

std::string to_string(Topology t) {
  switch (t) {
    case Topology::mzi: return "mzi";
    case Topology::cascade: return "cascade";
    case Topology::feedback: return "feedback";
  }
  return "?";
}

Topology topology_from_string(const std::string& s) {
  if (s == "mzi") return Topology::mzi;
  if (s == "cascade") return Topology::cascade;
  if (s == "feedback") return Topology::feedback;
  throw std::invalid_argument("unknown topology: " + s);
}

void NetworkConfig::validate() const {
  if (ell_c < 1) throw std::invalid_argument("NetworkConfig: ell_c >= 1");
  if (splitter_ratio != 0.5)
    throw std::invalid_argument(
        "NetworkConfig: only 50:50 splitters are supported");
  if (topology == Topology::mzi && ell_c != 1)
    throw std::invalid_argument("NetworkConfig: mzi implies ell_c = 1");
  if (topology == Topology::feedback && ell_c != 2)
    throw std::invalid_argument(
        "NetworkConfig: the feedback loop is built on the ell_c = 2 layout");
  const std::size_t want =
      topology == Topology::feedback
          ? 2
          : (topology == Topology::mzi ? 0
                                       : static_cast<std::size_t>(ell_c - 1));
  if (attenuators.size() != want)
    throw std::invalid_argument("NetworkConfig: expected " +
                                std::to_string(want) + " attenuators");
  for (double a : attenuators)
    if (!(a >= 0.0 && a <= 1.0))
      throw std::invalid_argument("NetworkConfig: attenuators must be in [0,1]");
  if (!(ubs_ratio > 0.0 && ubs_ratio <= 1.0))
    throw std::invalid_argument("NetworkConfig: ubs_ratio must be in (0,1]");
  if (!(constant_intensity >= 0.0))
    throw std::invalid_argument("NetworkConfig: negative intensity");
  for (double m : input_intensities)
    if (!(m >= 0.0))
      throw std::invalid_argument("NetworkConfig: negative intensity");
}

double NetworkConfig::arm_fraction(int k) const {
  if (k == 0) return 0.5;
  if (topology == Topology::mzi) return 0.5;
  if (topology == Topology::feedback) return 0.25;
  // balanced input division: equal effective cascade weights at A_k = 1
  const double scale = 3.0 * std::ldexp(1.0, ell_c - 1) - 2.0;
  const double num =
      (k == ell_c) ? std::ldexp(1.0, ell_c - 1) : std::ldexp(1.0, k);
  return 0.5 * num / scale;
}

BeamsplitPorts beamsplit(CoherentAmplitude a, CoherentAmplitude b) {
  return {(a + b).scaled(kInvSqrt2), (b - a).scaled(kInvSqrt2)};
}

CoherentAmplitude chi_state(
    std::span<const CoherentAmplitude> arms_oldest_first) {
  if (arms_oldest_first.size() < 2)
    throw std::invalid_argument("chi_state: need at least two arm states");
  CoherentAmplitude chi = arms_oldest_first[0];
  for (std::size_t k = 1; k < arms_oldest_first.size(); ++k)
    chi = beamsplit(chi, arms_oldest_first[k]).sum_port;
  return chi;
}

std::vector<DetectionRecord> run_network(const NetworkConfig& cfg,
                                         std::span<const Angle> phases,
                                         std::span<const double> intensities) {
  cfg.validate();
  const std::size_t lc = static_cast<std::size_t>(cfg.ell_c);
  if (phases.size() <= lc)
    throw std::invalid_argument("run_network: need more than ell_c phases");
  if (!intensities.empty() && intensities.size() != phases.size())
    throw std::invalid_argument(
        "run_network: intensity/phase length mismatch");

  auto mu_in = [&](std::size_t i) {
    return intensities.empty() ? cfg.constant_intensity : intensities[i];
  };

  std::vector<DetectionRecord> out;
  out.reserve(phases.size() - lc);

  if (cfg.topology == Topology::feedback) {
    const double a2_att = cfg.attenuators[0];
    const double t_loop = cfg.attenuators[1];
    const double eta = cfg.ubs_ratio;
    // loop intensity shrinks by t/4 per circulation; flag rounds until the
    // vacuum start has decayed from the records
    std::size_t warm = lc;
    if (t_loop > 0.0)
      warm += std::min<std::size_t>(
          200, static_cast<std::size_t>(
                   std::ceil(std::log(1e-12) / std::log(t_loop / 4.0))));
    CoherentAmplitude fb{0.0, 0.0};
    for (std::size_t i = lc; i < phases.size(); ++i) {
      const auto a2 = CoherentAmplitude::from_polar(
          a2_att * cfg.arm_fraction(2) * mu_in(i - 2), phases[i - 2].value());
      const auto a1 = CoherentAmplitude::from_polar(
          cfg.arm_fraction(1) * mu_in(i - 1), phases[i - 1].value());
      const auto a0 = CoherentAmplitude::from_polar(
          cfg.arm_fraction(0) * mu_in(i),
          phases[i].value() + cfg.phase_shift.value());
      const auto fb_in = fb.scaled(std::sqrt(t_loop));
      const auto merge = beamsplit(a2, fb_in);   // sum continues, diff monitored
      const auto comb = beamsplit(merge.sum_port, a1);
      const auto chi_raw = comb.sum_port;
      const auto fb_next = comb.diff_port;       // diff port feeds the loop
      const auto chi_pass = chi_raw.scaled(std::sqrt(eta));
      const auto chi_tap = chi_raw.scaled(std::sqrt(1.0 - eta));
      const auto fin = beamsplit(chi_pass, a0);
      DetectionRecord rec;
      rec.round_index = static_cast<std::int64_t>(i);
      rec.mu_beta1 = fin.sum_port.intensity();
      rec.mu_beta2 = fin.diff_port.intensity();
      rec.mu_xi = {merge.diff_port.intensity(), chi_tap.intensity(),
                   fb_next.intensity()};
      rec.mu_prime = {a2.intensity(), a1.intensity(), fb_in.intensity(),
                      a0.intensity()};
      rec.warmup = (i - lc) < warm;
      out.push_back(std::move(rec));
      fb = fb_next;
    }
    return out;
  }

  // mzi / cascade
  std::vector<CoherentAmplitude> arms(lc);
  for (std::size_t i = lc; i < phases.size(); ++i) {
    for (std::size_t k = lc; k >= 1; --k) {
      double att = 1.0;
      if (cfg.topology == Topology::cascade && k >= 2)
        att = cfg.attenuators[k - 2];
      arms[lc - k] = CoherentAmplitude::from_polar(
          att * cfg.arm_fraction(static_cast<int>(k)) * mu_in(i - k),
          phases[i - k].value());
    }
    const auto a0 = CoherentAmplitude::from_polar(
        cfg.arm_fraction(0) * mu_in(i),
        phases[i].value() + cfg.phase_shift.value());

    DetectionRecord rec;
    rec.round_index = static_cast<std::int64_t>(i);
    rec.mu_prime.reserve(lc + 1);
    for (const auto& a : arms) rec.mu_prime.push_back(a.intensity());
    rec.mu_prime.push_back(a0.intensity());

    CoherentAmplitude chi = arms[0];
    for (std::size_t k = 1; k < lc; ++k) {
      const auto ports = beamsplit(chi, arms[k]);
      chi = ports.sum_port;
      rec.mu_xi.push_back(ports.diff_port.intensity());
    }
    const auto fin = beamsplit(chi, a0);
    rec.mu_beta1 = fin.sum_port.intensity();
    rec.mu_beta2 = fin.diff_port.intensity();
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<DetectionRecord> run_network(const NetworkConfig& cfg,
                                         const PhaseSequence& phases) {
  return run_network(cfg, phases.phases, cfg.input_intensities);
}

}  // namespace phasecorr

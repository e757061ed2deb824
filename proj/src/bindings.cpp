#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "phasecorr/laser.hpp"
#include "phasecorr/optics.hpp"
#include "phasecorr/phase_model.hpp"
#include "phasecorr/q_engine.hpp"
#include "phasecorr/version.hpp"
#include "phasecorr/visibility.hpp"
#include "phasecorr/wrapped_gaussian.hpp"

namespace py = pybind11;
using namespace phasecorr;

namespace {

std::vector<Angle> to_angles(const std::vector<double>& v) {
  std::vector<Angle> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(Angle(x));
  return out;
}

std::vector<double> from_angles(const std::vector<Angle>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const Angle& a : v) out.push_back(a.value());
  return out;
}

CorrelationModel make_model(int lc, const std::vector<double>& r, double sigma,
                            double delta_phi_bar) {
  CorrelationModel m;
  m.ell_c = lc;
  m.r = r.empty() ? std::vector<double>(static_cast<std::size_t>(lc), 1.0) : r;
  m.sigma = sigma;
  m.delta_phi_bar = Angle(delta_phi_bar);
  m.validate();
  return m;
}

py::dict q_to_dict(const QResult& r) {
  py::dict d;
  d["q"] = r.q;
  d["argmin_phases"] = from_angles(r.argmin_phases);
  py::dict st;
  st["evaluations"] = r.solver_stats.evaluations;
  st["grid_resolution"] = r.solver_stats.grid_resolution;
  st["refinement_iterations"] = r.solver_stats.refinement_iterations;
  st["error_bound"] = r.solver_stats.error_bound;
  st["best_effort"] = r.solver_stats.best_effort;
  d["solver_stats"] = st;
  return d;
}

py::dict vis_to_dict(const VisibilityEstimate& v) {
  py::dict d;
  d["value"] = v.value;
  d["standard_error"] = v.standard_error;
  d["n_rounds"] = v.n_rounds;
  d["n_skipped"] = v.n_skipped;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Phase-correlation characterization for gain-switched laser pulse "
      "trains: wrapped-Gaussian phase model, interferometric visibility "
      "estimators, the q security parameter, and a stochastic rate-equation "
      "laser simulator.";
  m.attr("__version__") = kVersion;

  m.def("wrap_angle", &wrap_angle, py::arg("x"),
        "canonical reduction onto (-pi, pi]");

  m.def(
      "wg_pdf",
      [](double x, double mean, double sigma) {
        return wg_pdf(Angle(x), WGParams{mean, sigma});
      },
      py::arg("x"), py::arg("mean"), py::arg("sigma"),
      "wrapped-Gaussian density on (-pi, pi]");

  m.def(
      "wg_sample",
      [](double mean, double sigma, std::uint64_t seed, std::size_t n) {
        RngState rng(seed);
        std::vector<double> out(n);
        for (auto& x : out)
          x = wg_sample(WGParams{mean, sigma}, rng).value();
        return out;
      },
      py::arg("mean"), py::arg("sigma"), py::arg("seed"), py::arg("n") = 1,
      "deterministic wrapped-Gaussian draws");

  m.def(
      "circular_moment",
      [](const std::vector<double>& samples) {
        const auto angles = to_angles(samples);
        const auto mom = circular_moment(angles);
        return py::make_tuple(mom.resultant_length, mom.mean_angle.value());
      },
      py::arg("samples"), "(resultant_length, mean_angle) of phase samples");

  m.def(
      "combine_h",
      [](const std::vector<double>& prev, const std::vector<double>& r) {
        return combine_h(to_angles(prev), r).value();
      },
      py::arg("prev_oldest_first"), py::arg("r"),
      "arg of the residual-amplitude sum over the previous phases");

  m.def(
      "conditional_pdf",
      [](double phi, const std::vector<double>& prev, int lc,
         const std::vector<double>& r, double sigma, double delta_phi_bar) {
        return conditional_pdf(Angle(phi), to_angles(prev),
                               make_model(lc, r, sigma, delta_phi_bar));
      },
      py::arg("phi"), py::arg("prev_oldest_first"), py::arg("lc"),
      py::arg("r"), py::arg("sigma"), py::arg("delta_phi_bar") = 0.0);

  m.def(
      "generate_sequence",
      [](int lc, const std::vector<double>& r, double sigma,
         double delta_phi_bar, std::size_t n, std::uint64_t seed,
         std::int64_t warmup) {
        RngState rng(seed);
        const auto seq = generate_sequence(
            make_model(lc, r, sigma, delta_phi_bar), n, rng,
            warmup < 0 ? static_cast<std::size_t>(-1)
                       : static_cast<std::size_t>(warmup));
        return from_angles(seq.phases);
      },
      py::arg("lc"), py::arg("r"), py::arg("sigma"), py::arg("delta_phi_bar"),
      py::arg("n"), py::arg("seed"), py::arg("warmup") = -1);

  m.def(
      "q_first_order",
      [](double sigma1, double delta_phi_bar, int nodes, int grid_points) {
        QuadratureSpec quad{nodes};
        QSolverOptions opts;
        opts.grid_points = grid_points;
        return q_to_dict(
            q_first_order(sigma1, Angle(delta_phi_bar), quad, opts));
      },
      py::arg("sigma1"), py::arg("delta_phi_bar") = 0.0,
      py::arg("nodes") = 512, py::arg("grid_points") = 36);

  m.def(
      "q_second_order",
      [](double sigma2, double r2, double delta_phi_bar, int nodes,
         int grid_points) {
        QuadratureSpec quad{nodes};
        QSolverOptions opts;
        opts.grid_points = grid_points;
        return q_to_dict(q_second_order(
            make_model(2, {1.0, r2}, sigma2, delta_phi_bar), quad, opts));
      },
      py::arg("sigma2"), py::arg("r2") = 1.0, py::arg("delta_phi_bar") = 0.0,
      py::arg("nodes") = 512, py::arg("grid_points") = 36);

  m.def(
      "q_general",
      [](int lc, const std::vector<double>& r, double sigma,
         double delta_phi_bar, std::uint64_t budget, int nodes) {
        QuadratureSpec quad{nodes};
        return q_to_dict(q_general(make_model(lc, r, sigma, delta_phi_bar),
                                   quad, budget));
      },
      py::arg("lc"), py::arg("r"), py::arg("sigma"),
      py::arg("delta_phi_bar") = 0.0, py::arg("budget") = 5000000,
      py::arg("nodes") = 512);

  m.def(
      "run_network",
      [](const std::string& topology, int lc, double phase_shift,
         const std::vector<double>& attenuators,
         const std::vector<double>& phases,
         const std::vector<double>& intensities, double constant_intensity) {
        NetworkConfig cfg;
        cfg.topology = topology_from_string(topology);
        cfg.ell_c = lc;
        cfg.phase_shift = Angle(phase_shift);
        cfg.attenuators = attenuators;
        cfg.constant_intensity = constant_intensity;
        const auto recs = run_network(cfg, to_angles(phases), intensities);
        py::list out;
        for (const auto& r : recs) {
          py::dict d;
          d["round"] = r.round_index;
          d["mu_beta1"] = r.mu_beta1;
          d["mu_beta2"] = r.mu_beta2;
          d["mu_xi"] = r.mu_xi;
          d["mu_prime"] = r.mu_prime;
          d["warmup"] = r.warmup;
          out.append(d);
        }
        return out;
      },
      py::arg("topology"), py::arg("lc"), py::arg("phase_shift"),
      py::arg("attenuators"), py::arg("phases"),
      py::arg("intensities") = std::vector<double>{},
      py::arg("constant_intensity") = 1.0);

  m.def(
      "v_statistic",
      [](const std::string& topology, int lc, double phase_shift,
         const std::vector<double>& attenuators,
         const std::vector<double>& phases,
         const std::vector<double>& intensities) {
        NetworkConfig cfg;
        cfg.topology = topology_from_string(topology);
        cfg.ell_c = lc;
        cfg.phase_shift = Angle(phase_shift);
        cfg.attenuators = attenuators;
        const auto recs = run_network(cfg, to_angles(phases), intensities);
        return vis_to_dict(v_statistic(recs, cfg));
      },
      py::arg("topology"), py::arg("lc"), py::arg("phase_shift"),
      py::arg("attenuators"), py::arg("phases"),
      py::arg("intensities") = std::vector<double>{});

  m.def("threshold_current",
        [](py::kwargs kw) {
          LaserParams p = LaserParams::dml_defaults();
          if (kw.contains("g_n")) p.g_n = kw["g_n"].cast<double>();
          if (kw.contains("n_t")) p.n_t = kw["n_t"].cast<double>();
          if (kw.contains("tau_p")) p.tau_p = kw["tau_p"].cast<double>();
          return threshold_current(p);
        },
        "threshold current (A) for the default discrete-mode laser params");

  m.def(
      "simulate_pulses",
      [](double nu_hz, double i_on_a, double i_off_a, double dt_s,
         std::uint64_t pulses, std::uint64_t warmup, std::uint64_t seed) {
        RngState rng = RngState(seed).split(2);
        const DriveWaveform d{nu_hz, i_on_a, i_off_a, 0.5};
        IntegrateOptions opts;
        opts.seed_label = seed;
        const auto traj = integrate(
            LaserParams::dml_defaults(), d,
            static_cast<double>(pulses + warmup) / nu_hz, dt_s, rng, opts);
        auto train = extract_pulses(traj, d);
        for (std::size_t i = 0;
             i < train.warmup.size() && i < static_cast<std::size_t>(warmup);
             ++i)
          train.warmup[i] = true;
        py::dict out;
        out["phases"] = from_angles(train.phases.phases);
        out["intensities"] = train.intensities;
        out["warmup"] = train.warmup;
        out["clamped_steps"] = traj.clamped_steps;
        return out;
      },
      py::arg("nu_hz"), py::arg("i_on_a") = 0.140, py::arg("i_off_a") = 0.0,
      py::arg("dt_s") = 1e-14, py::arg("pulses") = 200, py::arg("warmup") = 20,
      py::arg("seed") = 1,
      "gain-switched pulse train from the stochastic rate equations");
}

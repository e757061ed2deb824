#include "phasecorr/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <thread>

#include "phasecorr/io.hpp"
#include "phasecorr/laser.hpp"
#include "phasecorr/optics.hpp"
#include "phasecorr/q_engine.hpp"
#include "phasecorr/version.hpp"
#include "phasecorr/visibility.hpp"

namespace phasecorr {

namespace fs = std::filesystem;
using io::ordered_json;

namespace {

const ordered_json& require(const ordered_json& j, const std::string& key,
                            const std::string& ctx) {
  if (!j.contains(key))
    throw config_error("missing config field: " + ctx + key);
  return j.at(key);
}

template <class T>
T require_as(const ordered_json& j, const std::string& key,
             const std::string& ctx) {
  try {
    return require(j, key, ctx).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw config_error("config field has wrong type: " + ctx + key);
  }
}

struct ArtifactSink {
  fs::path dir;
  std::vector<std::pair<std::string, std::string>> entries;  // path, stage

  void write_text(const std::string& name, const std::string& body,
                  const std::string& stage) {
    io::write_text_file(dir / name, body);
    entries.emplace_back(name, stage);
  }
  void note(const std::string& name, const std::string& stage) {
    entries.emplace_back(name, stage);
  }
};

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int effective_threads(const ExperimentConfig& cfg, const RunOverrides& ov) {
  int t = ov.threads ? *ov.threads : cfg.threads;
  if (t <= 0) {
    const unsigned hc = std::thread::hardware_concurrency();
    t = hc == 0 ? 1 : static_cast<int>(hc);
  }
  return t;
}

// ---- config block readers -------------------------------------------------

CorrelationModel read_model(const ordered_json& raw) {
  const auto& j = require(raw, "model", "");
  try {
    return io::model_from_json(j);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("model: ") + e.what());
  } catch (const nlohmann::json::exception&) {
    throw config_error("model: malformed block");
  }
}

QuadratureSpec read_solver_quad(const ordered_json& raw) {
  QuadratureSpec q;
  if (raw.contains("solver"))
    q.node_count = raw.at("solver").value("nodes", 512);
  try {
    q.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("solver.nodes: ") + e.what());
  }
  return q;
}

QSolverOptions read_solver_opts(const ordered_json& raw, int threads) {
  QSolverOptions o;
  o.threads = threads;
  if (raw.contains("solver")) {
    const auto& s = raw.at("solver");
    o.grid_points = s.value("grid_points", 36);
    o.multistart = s.value("multistart", 8);
    o.budget = s.value("budget", static_cast<std::uint64_t>(0));
  }
  if (o.grid_points < 4) throw config_error("solver.grid_points: must be >= 4");
  return o;
}

struct LaserBlock {
  LaserParams params = LaserParams::dml_defaults();
  double nu = 5e9;
  double i_on = 0.140;
  double i_off = 0.0;
  double duty = 0.5;
  double dt = 1e-14;
  std::uint64_t pulses = 1000;
  std::uint64_t warmup_pulses = 20;
};

LaserBlock read_laser(const ordered_json& raw, const RunOverrides& ov) {
  LaserBlock b;
  if (raw.contains("laser")) {
    const auto& j = raw.at("laser");
    b.nu = j.value("nu_hz", b.nu);
    b.i_on = j.value("i_on_a", b.i_on);
    b.i_off = j.value("i_off_a", b.i_off);
    b.duty = j.value("duty", b.duty);
    b.dt = j.value("dt_s", b.dt);
    b.pulses = j.value("pulses", b.pulses);
    b.warmup_pulses = j.value("warmup_pulses", b.warmup_pulses);
    auto param = [&](const char* k, double& v) { v = j.value(k, v); };
    param("g_n", b.params.g_n);
    param("n_t", b.params.n_t);
    param("epsilon", b.params.epsilon);
    param("tau_p", b.params.tau_p);
    param("beta", b.params.beta);
    param("alpha", b.params.alpha);
    param("rec_a", b.params.rec_a);
    param("rec_b", b.params.rec_b);
    param("rec_c", b.params.rec_c);
  }
  if (ov.pulses) b.pulses = *ov.pulses;
  if (b.pulses < 2) throw config_error("laser.pulses: must be >= 2");
  try {
    b.params.validate();
    DriveWaveform{b.nu, b.i_on, b.i_off, b.duty}.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("laser: ") + e.what());
  }
  return b;
}

SweepGrid read_sweep(const ordered_json& raw) {
  SweepGrid g;
  if (raw.contains("sweep")) {
    const auto& j = raw.at("sweep");
    g.phi_points = j.value("phi_points", 64);
    g.a_points = j.value("a_points", 32);
    g.a_min = j.value("a_min", 0.0);
    g.a_max = j.value("a_max", 1.0);
    g.refine_factor = j.value("refine_factor", 3);
  }
  if (g.phi_points < 2 || g.a_points < 2)
    throw config_error("sweep: grids need at least 2 points per axis");
  return g;
}

// ---- shared pipeline pieces -----------------------------------------------

// propagate pulse warmup flags onto the records that consumed those pulses
void apply_warmup(std::vector<DetectionRecord>& records,
                  const std::vector<bool>& warmup, int lc) {
  for (auto& rec : records) {
    const auto i = static_cast<std::size_t>(rec.round_index);
    for (int k = 0; k <= lc; ++k)
      if (warmup[i - static_cast<std::size_t>(k)]) rec.warmup = true;
  }
}

struct FirstOrderEstimate {
  double v = 0.0;
  double se = 0.0;
  double sigma_hat = INFINITY;
  double phi_max = 0.0;
  bool fully_randomized = false;
  std::size_t rounds = 0;
};

// MZI phi sweep on a fixed pulse train (common random numbers), visibility
// from the best/opposite settings, then sigma1 = sqrt(-2 ln V)
FirstOrderEstimate first_order_estimate(std::span<const Angle> phases,
                                        std::span<const double> intensities,
                                        const std::vector<bool>& warmup,
                                        int phi_points) {
  NetworkConfig cfg;
  cfg.topology = Topology::mzi;
  cfg.ell_c = 1;
  auto records_at = [&](double phi) {
    cfg.phase_shift = Angle(phi);
    auto rec = run_network(cfg, phases, intensities);
    if (!warmup.empty()) apply_warmup(rec, warmup, 1);
    return rec;
  };
  double best_phi = 0.0, best_i = -INFINITY;
  for (int k = 0; k < phi_points; ++k) {
    const double phi = -kPi + kTwoPi * k / phi_points;
    const auto rec = records_at(phi);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rec)
      if (!r.warmup) {
        sum += r.mu_beta1;
        ++n;
      }
    const double mean = n ? sum / static_cast<double>(n) : -INFINITY;
    if (mean > best_i) {
      best_i = mean;
      best_phi = phi;
    }
  }
  const auto at_max = records_at(best_phi);
  const auto at_min = records_at(wrap_angle(best_phi + kPi));
  const auto vis = visibility_first_order(at_max, at_min);
  FirstOrderEstimate est;
  est.v = vis.value;
  est.se = vis.standard_error;
  est.phi_max = best_phi;
  est.rounds = vis.n_rounds;
  if (vis.value <= 0.0) {
    est.fully_randomized = true;
  } else {
    est.sigma_hat = std::sqrt(-2.0 * std::log(std::min(1.0, vis.value)));
  }
  return est;
}

struct CellOutcome {
  ordered_json row;
  std::string error;
};

// run cells[i] -> outcome via fn, up to `threads` at a time, results ordered
void run_cells(std::size_t n, int threads,
               const std::function<CellOutcome(std::size_t)>& fn,
               std::vector<CellOutcome>& out) {
  out.resize(n);
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          out[i] = fn(i);
        } catch (const std::exception& e) {
          out[i].error = e.what();
        }
      }
    });
  for (auto& th : pool) th.join();
}

// ---- experiments ------------------------------------------------------------

bool wants(const ExperimentConfig& cfg, const char* fmt) {
  return std::find(cfg.formats.begin(), cfg.formats.end(), fmt) !=
         cfg.formats.end();
}

RunStatus exp_synth_phases(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const CorrelationModel m = read_model(cfg.raw);
  const auto n = cfg.raw.value("rounds", static_cast<std::size_t>(100000));
  RngState rng = RngState(cfg.seed).split(1);
  const PhaseSequence seq = generate_sequence(m, n, rng);
  PhaseSequence tagged = seq;
  tagged.seed = cfg.seed;
  if (wants(cfg, "csv"))
    sink.write_text("phases.csv", io::phase_sequence_csv(tagged), "synth-phases");
  if (wants(cfg, "json"))
    sink.write_text("phases.json", io::phase_sequence_json(tagged).dump(2) + "\n",
                    "synth-phases");
  return RunStatus::ok;
}

RunStatus exp_simulate_laser(const ExperimentConfig& cfg, ArtifactSink& sink,
                             const RunOverrides& ov) {
  const LaserBlock b = read_laser(cfg.raw, ov);
  RngState rng = RngState(cfg.seed).split(2);
  IntegrateOptions opts;
  opts.seed_label = cfg.seed;
  const double duration =
      static_cast<double>(b.pulses + b.warmup_pulses) / b.nu;
  const DriveWaveform drive{b.nu, b.i_on, b.i_off, b.duty};
  const FieldTrajectory traj =
      integrate(b.params, drive, duration, b.dt, rng, opts);
  PulseTrain train = extract_pulses(traj, drive);
  for (std::size_t i = 0; i < train.warmup.size() &&
                          i < static_cast<std::size_t>(b.warmup_pulses);
       ++i)
    train.warmup[i] = true;
  io::write_trajectory(sink.dir / "trajectory.bin", traj);
  sink.note("trajectory.bin", "simulate-laser");
  if (wants(cfg, "csv")) {
    sink.write_text("trajectory.csv", io::trajectory_csv(traj),
                    "simulate-laser");
    sink.write_text("pulses.csv", io::pulse_train_csv(train), "simulate-laser");
  }
  ordered_json j;
  j["total_steps"] = traj.total_steps;
  j["clamped_steps"] = traj.clamped_steps;
  j["decimation"] = traj.decimation;
  j["pulses"] = train.phases.phases.size();
  j["pulses_below_floor"] = train.n_skipped;
  if (wants(cfg, "json"))
    sink.write_text("laser.json", j.dump(2) + "\n", "simulate-laser");
  return RunStatus::ok;
}

RunStatus exp_visibility(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const CorrelationModel m = read_model(cfg.raw);
  if (m.ell_c != 1)
    throw config_error("model.lc: the visibility experiment uses ell_c = 1");
  const auto n = cfg.raw.value("rounds", static_cast<std::size_t>(100000));
  const SweepGrid grid = read_sweep(cfg.raw);
  RngState rng = RngState(cfg.seed).split(3);
  const PhaseSequence seq = generate_sequence(m, n, rng);
  const auto est = first_order_estimate(seq.phases, {}, {}, grid.phi_points);
  ordered_json j;
  j["visibility"] = est.v;
  j["standard_error"] = est.se;
  j["phi_max"] = est.phi_max;
  j["sigma_hat"] =
      est.fully_randomized ? ordered_json("inf") : ordered_json(est.sigma_hat);
  j["fully_randomized"] = est.fully_randomized;
  j["rounds"] = est.rounds;
  if (wants(cfg, "json"))
    sink.write_text("visibility.json", j.dump(2) + "\n", "visibility");
  return RunStatus::ok;
}

RecordSupplier synthetic_supplier(const PhaseSequence& seq) {
  return [&seq](const NetworkConfig& net) { return run_network(net, seq.phases, {}); };
}

RunStatus exp_calibrate(const ExperimentConfig& cfg, ArtifactSink& sink,
                        CalibrationResult* out_result) {
  const CorrelationModel m = read_model(cfg.raw);
  const auto n = cfg.raw.value("rounds", static_cast<std::size_t>(100000));
  const SweepGrid grid = read_sweep(cfg.raw);
  RngState rng = RngState(cfg.seed).split(4);
  const PhaseSequence seq = generate_sequence(m, n + 4, rng);

  NetworkConfig base;
  base.topology = m.ell_c == 1 ? Topology::mzi : Topology::cascade;
  base.ell_c = m.ell_c;
  base.attenuators.assign(
      m.ell_c >= 2 ? static_cast<std::size_t>(m.ell_c - 1) : 0, 1.0);
  const CalibrationResult cal = calibrate(synthetic_supplier(seq), base, grid);
  if (wants(cfg, "csv"))
    sink.write_text("sweep.csv", io::sweep_csv(cal.sweep), "calibrate");
  if (wants(cfg, "json"))
    sink.write_text("calibration.json", io::calibration_json(cal).dump(2) + "\n",
                    "calibrate");
  if (out_result) *out_result = cal;
  return RunStatus::ok;
}

RunStatus exp_estimate_q(const ExperimentConfig& cfg, ArtifactSink& sink,
                         int threads) {
  const CorrelationModel m = read_model(cfg.raw);
  const QuadratureSpec quad = read_solver_quad(cfg.raw);
  QSolverOptions opts = read_solver_opts(cfg.raw, threads);
  QResult r;
  if (m.ell_c == 1) {
    r = q_first_order(m.sigma, m.delta_phi_bar, quad, opts);
  } else if (m.ell_c == 2) {
    r = q_second_order(m, quad, opts);
  } else {
    const std::uint64_t budget = opts.budget ? opts.budget : 5000000;
    r = q_general(m, quad, budget, opts);
  }
  if (wants(cfg, "json"))
    sink.write_text("q.json", io::q_result_json(r).dump(2) + "\n", "estimate-q");
  return RunStatus::ok;
}

RunStatus exp_fig3(const ExperimentConfig& cfg, ArtifactSink& sink,
                   int threads) {
  const QuadratureSpec quad = read_solver_quad(cfg.raw);
  QSolverOptions opts = read_solver_opts(cfg.raw, threads);
  std::vector<double> sigmas = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<double> rs_a = {0.2, 0.6, 1.0};
  std::vector<double> sigmas_b = {1.0, 1.73};
  std::vector<double> rs_b = {0.2, 0.4, 0.6, 0.8, 1.0};
  if (cfg.raw.contains("fig3")) {
    const auto& j = cfg.raw.at("fig3");
    sigmas = j.value("sigma", sigmas);
    rs_a = j.value("r_fixed", rs_a);
    sigmas_b = j.value("sigma_fixed", sigmas_b);
    rs_b = j.value("r", rs_b);
  }
  auto qv = [&](double sigma, double r) {
    CorrelationModel m;
    m.ell_c = 2;
    m.r = {1.0, r};
    m.sigma = sigma;
    return q_second_order(m, quad, opts).q;
  };
  std::string a = "sigma2,r2,q\n";
  for (double r : rs_a)
    for (double s : sigmas)
      a += io::format_double(s) + "," + io::format_double(r) + "," +
           io::format_double(qv(s, r)) + "\n";
  std::string b = "r2,sigma2,q\n";
  for (double s : sigmas_b)
    for (double r : rs_b)
      b += io::format_double(r) + "," + io::format_double(s) + "," +
           io::format_double(qv(s, r)) + "\n";
  sink.write_text("fig3a.csv", a, "fig3");
  sink.write_text("fig3b.csv", b, "fig3");
  return RunStatus::ok;
}

struct TableCells {
  std::vector<double> nu;
  std::vector<double> i_off;
};

TableCells read_cells(const ExperimentConfig& cfg) {
  TableCells c;
  c.nu = {1e8, 1e9, 5e9, 1e10};
  c.i_off = {0.0, 0.007, 0.014};
  if (cfg.raw.contains("cells")) {
    const auto& j = cfg.raw.at("cells");
    c.nu = j.value("nu_hz", c.nu);
    c.i_off = j.value("i_off_a", c.i_off);
  }
  return c;
}

// laser -> pulse train for one sweep cell
PulseTrain cell_pulse_train(const LaserBlock& base, double nu, double i_off,
                            std::uint64_t seed, std::size_t cell_index) {
  LaserBlock b = base;
  b.nu = nu;
  b.i_off = i_off;
  RngState rng = RngState(seed).split(1000 + cell_index);
  IntegrateOptions opts;
  opts.seed_label = seed;
  const DriveWaveform drive{b.nu, b.i_on, b.i_off, b.duty};
  const double duration =
      static_cast<double>(b.pulses + b.warmup_pulses) / b.nu;
  const FieldTrajectory traj =
      integrate(b.params, drive, duration, b.dt, rng, opts);
  PulseTrain train = extract_pulses(traj, drive);
  for (std::size_t i = 0; i < train.warmup.size() &&
                          i < static_cast<std::size_t>(b.warmup_pulses);
       ++i)
    train.warmup[i] = true;
  return train;
}

RunStatus exp_tables(const ExperimentConfig& cfg, ArtifactSink& sink,
                     const RunOverrides& ov, int threads, bool second_order) {
  const LaserBlock base = read_laser(cfg.raw, ov);
  const SweepGrid grid = read_sweep(cfg.raw);
  const QuadratureSpec quad = read_solver_quad(cfg.raw);
  const TableCells cells = read_cells(cfg);

  struct Cell {
    double nu;
    double i_off;
  };
  std::vector<Cell> list;
  for (double nu : cells.nu)
    for (double io_ : cells.i_off) list.push_back({nu, io_});

  QSolverOptions qopts = read_solver_opts(cfg.raw, 1);
  std::vector<CellOutcome> outcomes;
  run_cells(list.size(), threads, [&](std::size_t i) {
    const Cell& c = list[i];
    const PulseTrain train =
        cell_pulse_train(base, c.nu, c.i_off, cfg.seed, i);
    ordered_json row;
    row["nu_hz"] = c.nu;
    row["i_off_a"] = c.i_off;
    row["pulses"] = train.phases.phases.size();
    row["pulses_below_floor"] = train.n_skipped;
    row["reduced_scale"] = train.phases.phases.size() < 10000;
    if (!second_order) {
      const auto est = first_order_estimate(train.phases.phases,
                                            train.intensities, train.warmup,
                                            grid.phi_points);
      row["v"] = est.v;
      row["v_se"] = est.se;
      row["fully_randomized"] = est.fully_randomized;
      row["sigma_hat"] = est.fully_randomized ? ordered_json("inf")
                                              : ordered_json(est.sigma_hat);
      row["q"] = est.fully_randomized
                     ? 1.0
                     : q_first_order(est.sigma_hat, Angle(0.0), quad, qopts).q;
    } else {
      NetworkConfig net;
      net.topology = Topology::cascade;
      net.ell_c = 2;
      net.attenuators = {1.0};
      RecordSupplier supplier = [&](const NetworkConfig& n) {
        auto rec = run_network(n, train.phases.phases, train.intensities);
        apply_warmup(rec, train.warmup, 2);
        return rec;
      };
      const CalibrationResult cal = calibrate(supplier, net, grid);
      row["v_max"] = cal.v_max.value;
      row["v_se"] = cal.v_max.standard_error;
      row["fully_randomized"] = cal.fully_randomized;
      row["sigma_hat"] = cal.fully_randomized ? ordered_json("inf")
                                              : ordered_json(cal.sigma_hat);
      row["r_hat"] = cal.r_hat.empty() ? 1.0 : cal.r_hat[0];
      row["delta_phi_bar_hat"] = cal.delta_phi_bar_hat.value();
      if (cal.fully_randomized) {
        row["q"] = 1.0;
      } else {
        CorrelationModel m;
        m.ell_c = 2;
        m.r = {1.0, std::max(0.0, cal.r_hat.empty() ? 1.0 : cal.r_hat[0])};
        m.delta_phi_bar = cal.delta_phi_bar_hat;
        m.sigma = cal.sigma_hat;
        row["q"] = q_second_order(m, quad, qopts).q;
      }
    }
    return CellOutcome{std::move(row), {}};
  }, outcomes);

  const std::string name = second_order ? "table1" : "table2";
  std::string csv = second_order
                        ? "nu_hz,i_off_a,pulses,sigma_hat,r_hat,q,v_max,v_se,"
                          "fully_randomized,reduced_scale\n"
                        : "nu_hz,i_off_a,pulses,sigma_hat,q,v,v_se,"
                          "fully_randomized,reduced_scale\n";
  ordered_json rows = ordered_json::array();
  bool partial = false;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& oc = outcomes[i];
    if (!oc.error.empty()) {
      partial = true;
      ordered_json row;
      row["nu_hz"] = list[i].nu;
      row["i_off_a"] = list[i].i_off;
      row["error"] = oc.error;
      rows.push_back(row);
      continue;
    }
    rows.push_back(oc.row);
    const auto& r = oc.row;
    auto sig = [&]() {
      return r.at("sigma_hat").is_string()
                 ? std::string("inf")
                 : io::format_double(r.at("sigma_hat").get<double>());
    };
    if (second_order) {
      csv += io::format_double(r.at("nu_hz").get<double>()) + "," +
             io::format_double(r.at("i_off_a").get<double>()) + "," +
             std::to_string(r.at("pulses").get<std::size_t>()) + "," + sig() +
             "," + io::format_double(r.at("r_hat").get<double>()) + "," +
             io::format_double(r.at("q").get<double>()) + "," +
             io::format_double(r.at("v_max").get<double>()) + "," +
             io::format_double(r.at("v_se").get<double>()) + "," +
             (r.at("fully_randomized").get<bool>() ? "1" : "0") + "," +
             (r.at("reduced_scale").get<bool>() ? "1" : "0") + "\n";
    } else {
      csv += io::format_double(r.at("nu_hz").get<double>()) + "," +
             io::format_double(r.at("i_off_a").get<double>()) + "," +
             std::to_string(r.at("pulses").get<std::size_t>()) + "," + sig() +
             "," + io::format_double(r.at("q").get<double>()) + "," +
             io::format_double(r.at("v").get<double>()) + "," +
             io::format_double(r.at("v_se").get<double>()) + "," +
             (r.at("fully_randomized").get<bool>() ? "1" : "0") + "," +
             (r.at("reduced_scale").get<bool>() ? "1" : "0") + "\n";
    }
  }
  if (wants(cfg, "csv")) sink.write_text(name + ".csv", csv, name);
  if (wants(cfg, "json")) {
    ordered_json j;
    j["cells"] = rows;
    sink.write_text(name + ".json", j.dump(2) + "\n", name);
  }
  return partial ? RunStatus::partial : RunStatus::ok;
}

RunStatus exp_fig4(const ExperimentConfig& cfg, ArtifactSink& sink,
                   const RunOverrides& ov, int threads) {
  const LaserBlock base = read_laser(cfg.raw, ov);
  const SweepGrid grid = read_sweep(cfg.raw);
  const TableCells cells = read_cells(cfg);
  struct Cell {
    double nu;
    double i_off;
  };
  std::vector<Cell> list;
  for (double nu : cells.nu)
    for (double io_ : cells.i_off) list.push_back({nu, io_});
  std::vector<CellOutcome> outcomes;
  std::vector<std::string> csvs(list.size());
  run_cells(list.size(), threads, [&](std::size_t i) {
    const Cell& c = list[i];
    const PulseTrain train =
        cell_pulse_train(base, c.nu, c.i_off, cfg.seed, i);
    NetworkConfig net;
    net.topology = Topology::cascade;
    net.ell_c = 2;
    net.attenuators = {1.0};
    RecordSupplier supplier = [&](const NetworkConfig& n) {
      auto rec = run_network(n, train.phases.phases, train.intensities);
      apply_warmup(rec, train.warmup, 2);
      return rec;
    };
    const CalibrationResult cal = calibrate(supplier, net, grid);
    csvs[i] = io::sweep_csv(cal.sweep);
    ordered_json row;
    row["nu_hz"] = c.nu;
    row["i_off_a"] = c.i_off;
    row["v_max"] = cal.v_max.value;
    return CellOutcome{std::move(row), {}};
  }, outcomes);
  bool partial = false;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (!outcomes[i].error.empty()) {
      partial = true;
      continue;
    }
    char name[64];
    std::snprintf(name, sizeof name, "fig4_nu%.0fMHz_ioff%.0fmA.csv",
                  list[i].nu / 1e6, list[i].i_off * 1e3);
    sink.write_text(name, csvs[i], "fig4");
  }
  return partial ? RunStatus::partial : RunStatus::ok;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const ordered_json& j) {
  ExperimentConfig cfg;
  cfg.kind = require_as<std::string>(j, "experiment", "");
  static const char* kinds[] = {"synth-phases", "simulate-laser", "visibility",
                                "calibrate",    "estimate-q",     "table1",
                                "table2",       "fig3",           "fig4"};
  if (std::find_if(std::begin(kinds), std::end(kinds), [&](const char* k) {
        return cfg.kind == k;
      }) == std::end(kinds))
    throw config_error("experiment: unknown kind '" + cfg.kind + "'");
  cfg.seed = j.value("seed", static_cast<std::uint64_t>(1));
  cfg.out_dir = j.value("out_dir", std::string("out"));
  cfg.threads = j.value("threads", 0);
  if (j.contains("formats"))
    cfg.formats = j.at("formats").get<std::vector<std::string>>();
  for (const auto& f : cfg.formats)
    if (f != "json" && f != "csv")
      throw config_error("formats: unknown format '" + f + "'");
  cfg.raw = j;
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw config_error("cannot open config file " + p.string());
  ordered_json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config parse error in " + p.string() + ": " + e.what());
  }
  return from_json(j);
}

RunStatus run_experiment(ExperimentConfig cfg, const RunOverrides& ov) {
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  cfg.raw["experiment"] = cfg.kind;
  cfg.raw["seed"] = cfg.seed;
  cfg.raw["out_dir"] = cfg.out_dir.string();
  cfg.raw["formats"] = cfg.formats;
  if (ov.pulses && cfg.raw.contains("laser"))
    cfg.raw["laser"]["pulses"] = *ov.pulses;

  const std::string started = iso_now();
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec)
    throw config_error("out_dir: cannot create " + cfg.out_dir.string());
  ArtifactSink sink{cfg.out_dir, {}};
  const int threads = effective_threads(cfg, ov);

  RunStatus status = RunStatus::ok;
  if (cfg.kind == "synth-phases") {
    status = exp_synth_phases(cfg, sink);
  } else if (cfg.kind == "simulate-laser") {
    status = exp_simulate_laser(cfg, sink, ov);
  } else if (cfg.kind == "visibility") {
    status = exp_visibility(cfg, sink);
  } else if (cfg.kind == "calibrate") {
    status = exp_calibrate(cfg, sink, nullptr);
  } else if (cfg.kind == "estimate-q") {
    status = exp_estimate_q(cfg, sink, threads);
  } else if (cfg.kind == "fig3") {
    status = exp_fig3(cfg, sink, threads);
  } else if (cfg.kind == "table1") {
    status = exp_tables(cfg, sink, ov, threads, true);
  } else if (cfg.kind == "table2") {
    status = exp_tables(cfg, sink, ov, threads, false);
  } else if (cfg.kind == "fig4") {
    status = exp_fig4(cfg, sink, ov, threads);
  }

  ordered_json manifest;
  manifest["tool_version"] = kVersion;
  manifest["seed"] = cfg.seed;
  manifest["started"] = started;
  manifest["finished"] = iso_now();
  manifest["status"] = static_cast<int>(status);
  manifest["config"] = cfg.raw;
  ordered_json outputs = ordered_json::array();
  for (const auto& [name, stage] : sink.entries) {
    ordered_json o;
    o["path"] = name;
    o["stage"] = stage;
    char sum[24];
    std::snprintf(sum, sizeof sum, "fnv1a:%016llx",
                  static_cast<unsigned long long>(
                      io::file_checksum(cfg.out_dir / name)));
    o["checksum"] = sum;
    outputs.push_back(std::move(o));
  }
  manifest["outputs"] = std::move(outputs);
  io::write_text_file(cfg.out_dir / "run_manifest.json",
                      manifest.dump(2) + "\n");
  return status;
}

}  // namespace phasecorr

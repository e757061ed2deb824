#include "phasecorr/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace phasecorr::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_checksum(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::string body((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return fnv1a(body);
}

void write_text_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << body;
  if (!f) throw std::runtime_error("short write to " + p.string());
}

std::string phase_sequence_csv(const PhaseSequence& seq) {
  std::string s = "round_index,phase\n";
  for (std::size_t i = 0; i < seq.phases.size(); ++i) {
    s += std::to_string(i);
    s += ',';
    s += format_double(seq.phases[i].value());
    s += '\n';
  }
  return s;
}

std::string detection_records_csv(std::span<const DetectionRecord> records) {
  std::string s = "round,mu_beta1,mu_beta2";
  const std::size_t n_xi = records.empty() ? 0 : records[0].mu_xi.size();
  const std::size_t n_pr = records.empty() ? 0 : records[0].mu_prime.size();
  for (std::size_t k = 0; k < n_xi; ++k) s += ",mu_xi" + std::to_string(k);
  for (std::size_t k = 0; k < n_pr; ++k) s += ",mu_prime" + std::to_string(k);
  s += ",warmup\n";
  for (const auto& r : records) {
    s += std::to_string(r.round_index);
    s += ',';
    s += format_double(r.mu_beta1);
    s += ',';
    s += format_double(r.mu_beta2);
    for (double v : r.mu_xi) {
      s += ',';
      s += format_double(v);
    }
    for (double v : r.mu_prime) {
      s += ',';
      s += format_double(v);
    }
    s += r.warmup ? ",1\n" : ",0\n";
  }
  return s;
}

std::string sweep_csv(std::span<const SweepPoint> sweep) {
  std::string s = "phi";
  const std::size_t n_att =
      sweep.empty() ? 0 : sweep[0].settings.attenuators.size();
  for (std::size_t k = 0; k < n_att; ++k) s += ",A" + std::to_string(k + 2);
  s += ",v,se,n_rounds,n_skipped\n";
  for (const auto& pt : sweep) {
    s += format_double(pt.settings.phi.value());
    for (double a : pt.settings.attenuators) {
      s += ',';
      s += format_double(a);
    }
    s += ',';
    s += format_double(pt.v.value);
    s += ',';
    s += format_double(pt.v.standard_error);
    s += ',';
    s += std::to_string(pt.v.n_rounds);
    s += ',';
    s += std::to_string(pt.v.n_skipped);
    s += '\n';
  }
  return s;
}

ordered_json model_json(const CorrelationModel& m) {
  ordered_json j;
  j["lc"] = m.ell_c;
  j["r"] = m.r;
  j["delta_phi_bar"] = m.delta_phi_bar.value();
  j["sigma"] = m.sigma;
  return j;
}

CorrelationModel model_from_json(const ordered_json& j) {
  CorrelationModel m;
  m.ell_c = j.at("lc").get<int>();
  if (j.contains("r"))
    m.r = j.at("r").get<std::vector<double>>();
  else
    m.r.assign(static_cast<std::size_t>(m.ell_c), 1.0);
  m.delta_phi_bar = Angle(j.value("delta_phi_bar", 0.0));
  m.sigma = j.at("sigma").get<double>();
  m.validate();
  return m;
}

ordered_json phase_sequence_json(const PhaseSequence& seq) {
  ordered_json j;
  j["seed"] = seq.seed;
  j["model"] = seq.model ? model_json(*seq.model) : ordered_json(nullptr);
  ordered_json ph = ordered_json::array();
  for (const auto& a : seq.phases) ph.push_back(a.value());
  j["phases"] = std::move(ph);
  return j;
}

ordered_json q_result_json(const QResult& r) {
  ordered_json j;
  j["q"] = r.q;
  ordered_json ph = ordered_json::array();
  for (const auto& a : r.argmin_phases) ph.push_back(a.value());
  j["argmin_phases"] = std::move(ph);
  ordered_json st;
  st["evaluations"] = r.solver_stats.evaluations;
  st["grid_resolution"] = r.solver_stats.grid_resolution;
  st["refinement_iterations"] = r.solver_stats.refinement_iterations;
  st["error_bound"] = r.solver_stats.error_bound;
  st["best_effort"] = r.solver_stats.best_effort;
  j["solver_stats"] = std::move(st);
  return j;
}

ordered_json visibility_json(const VisibilityEstimate& v) {
  ordered_json j;
  j["value"] = v.value;
  j["standard_error"] = v.standard_error;
  j["n_rounds"] = v.n_rounds;
  j["n_skipped"] = v.n_skipped;
  return j;
}

ordered_json calibration_json(const CalibrationResult& c) {
  ordered_json j;
  j["sigma_hat"] = c.fully_randomized ? ordered_json("inf")
                                      : ordered_json(c.sigma_hat);
  j["fully_randomized"] = c.fully_randomized;
  j["r_hat"] = c.r_hat;
  j["delta_phi_bar_hat"] = c.delta_phi_bar_hat.value();
  j["v_max"] = visibility_json(c.v_max);
  ordered_json s;
  s["phi"] = c.settings_max.phi.value();
  s["attenuators"] = c.settings_max.attenuators;
  j["settings_max"] = std::move(s);
  j["sweep_points"] = c.sweep.size();
  return j;
}

namespace {
constexpr char kTrajMagic[8] = {'P', 'C', 'T', 'R', 'A', 'J', '1', '\n'};

template <class T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
void get(std::ifstream& f, T& v) {
  f.read(reinterpret_cast<char*>(&v), sizeof v);
}
}  // namespace

void write_trajectory(const std::filesystem::path& p,
                      const FieldTrajectory& t) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f.write(kTrajMagic, sizeof kTrajMagic);
  put(f, t.dt);
  put(f, t.seed);
  const std::uint64_t dec = static_cast<std::uint64_t>(t.decimation);
  put(f, dec);
  const std::uint64_t n = t.t.size();
  put(f, n);
  put(f, t.params);
  put(f, t.drive);
  auto col = [&](const std::vector<double>& v) {
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  col(t.t);
  col(t.e_re);
  col(t.e_im);
  col(t.n);
  if (!f) throw std::runtime_error("short write to " + p.string());
}

FieldTrajectory read_trajectory(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  char magic[8];
  f.read(magic, sizeof magic);
  if (std::memcmp(magic, kTrajMagic, sizeof magic) != 0)
    throw std::runtime_error(p.string() + " is not a trajectory file");
  FieldTrajectory t;
  std::uint64_t dec = 1, n = 0;
  get(f, t.dt);
  get(f, t.seed);
  get(f, dec);
  get(f, n);
  get(f, t.params);
  get(f, t.drive);
  t.decimation = static_cast<int>(dec);
  auto col = [&](std::vector<double>& v) {
    v.resize(n);
    f.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(n * sizeof(double)));
  };
  col(t.t);
  col(t.e_re);
  col(t.e_im);
  col(t.n);
  if (!f) throw std::runtime_error("truncated trajectory file " + p.string());
  return t;
}

std::string trajectory_csv(const FieldTrajectory& t) {
  std::string s = "t,e_re,e_im,n\n";
  for (std::size_t i = 0; i < t.t.size(); ++i) {
    s += format_double(t.t[i]);
    s += ',';
    s += format_double(t.e_re[i]);
    s += ',';
    s += format_double(t.e_im[i]);
    s += ',';
    s += format_double(t.n[i]);
    s += '\n';
  }
  return s;
}

std::string pulse_train_csv(const PulseTrain& pt) {
  std::string s = "round_index,phase,intensity,warmup\n";
  for (std::size_t i = 0; i < pt.phases.phases.size(); ++i) {
    s += std::to_string(i);
    s += ',';
    s += format_double(pt.phases.phases[i].value());
    s += ',';
    s += format_double(pt.intensities[i]);
    s += pt.warmup[i] ? ",1\n" : ",0\n";
  }
  return s;
}

}  // namespace phasecorr::io

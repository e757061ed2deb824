// Command-line front end: subcommands mirror the experiment kinds; lab units
// (GHz, mA, ps) are converted to SI at this boundary.

#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phasecorr/q_engine.hpp"
#include "phasecorr/runner.hpp"
#include "phasecorr/version.hpp"

namespace {

using phasecorr::ExperimentConfig;
using phasecorr::RunOverrides;
using phasecorr::RunStatus;
using ordered_json = nlohmann::ordered_json;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> pulses;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--seed", f.seed, "override the RNG seed");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--pulses", f.pulses, "override the per-cell pulse count");
  cmd->add_option("--threads", f.threads, "worker thread cap (0 = auto)");
}

int run_kind(const std::string& kind, const CommonFlags& f,
             const std::function<void(ordered_json&)>& tweak) {
  try {
    ordered_json j;
    if (!f.config_path.empty()) {
      j = ExperimentConfig::from_file(f.config_path).raw;
    }
    j["experiment"] = kind;
    if (tweak) tweak(j);
    ExperimentConfig cfg = ExperimentConfig::from_json(j);
    RunOverrides ov;
    ov.seed = f.seed;
    if (f.out_dir) ov.out_dir = *f.out_dir;
    ov.pulses = f.pulses;
    ov.threads = f.threads;
    return static_cast<int>(phasecorr::run_experiment(cfg, ov));
  } catch (const phasecorr::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return static_cast<int>(RunStatus::validation_error);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return static_cast<int>(RunStatus::validation_error);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(RunStatus::numerical_error);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gain-switched laser phase-correlation toolkit"};
  app.set_version_flag("--version", phasecorr::kVersion);
  app.require_subcommand(1);

  struct Sub {
    CLI::App* cmd;
    CommonFlags flags;
  };
  std::map<std::string, Sub> subs;
  for (const char* kind :
       {"synth-phases", "simulate-laser", "visibility", "calibrate",
        "estimate-q", "table1", "table2", "fig3", "fig4"}) {
    Sub s;
    s.cmd = app.add_subcommand(kind, std::string("run the ") + kind +
                                         " experiment");
    add_common(s.cmd, subs[kind].flags);
    subs[kind].cmd = s.cmd;
  }

  // frequently tweaked knobs, in lab units
  double lc = 0, sigma = -1, r2 = -1, dpb = 0;
  bool have_dpb = false;
  auto* eq = subs["estimate-q"].cmd;
  eq->add_option("--lc", lc, "correlation length");
  eq->add_option("--sigma", sigma, "noise standard deviation (rad)");
  eq->add_option("--r2", r2, "residual weight r_{i-2}");
  eq->add_option("--delta-phi-bar", dpb, "noise mean (rad)")
      ->each([&](const std::string&) { have_dpb = true; });

  double nu_ghz = 0, ion_ma = 0, ioff_ma = -1, dt_ps = 0;
  for (const char* k : {"simulate-laser", "table1", "table2", "fig4"}) {
    auto* c = subs[k].cmd;
    c->add_option("--nu-ghz", nu_ghz, "repetition rate (GHz)");
    c->add_option("--i-on-ma", ion_ma, "on current (mA)");
    c->add_option("--i-off-ma", ioff_ma, "off current (mA)");
    c->add_option("--dt-ps", dt_ps, "integration step (ps)");
  }

  CLI11_PARSE(app, argc, argv);

  for (auto& [kind, sub] : subs) {
    if (!sub.cmd->parsed()) continue;
    return run_kind(kind, sub.flags, [&](ordered_json& j) {
      if (kind == "estimate-q") {
        if (lc > 0) j["model"]["lc"] = static_cast<int>(lc);
        if (sigma >= 0) j["model"]["sigma"] = sigma;
        if (r2 >= 0) j["model"]["r"] = std::vector<double>{1.0, r2};
        if (have_dpb) j["model"]["delta_phi_bar"] = dpb;
      }
      if (nu_ghz > 0) {
        j["laser"]["nu_hz"] = nu_ghz * 1e9;
        j["cells"]["nu_hz"] = std::vector<double>{nu_ghz * 1e9};
      }
      if (ion_ma > 0) j["laser"]["i_on_a"] = ion_ma * 1e-3;
      if (ioff_ma >= 0) {
        j["laser"]["i_off_a"] = ioff_ma * 1e-3;
        j["cells"]["i_off_a"] = std::vector<double>{ioff_ma * 1e-3};
      }
      if (dt_ps > 0) j["laser"]["dt_s"] = dt_ps * 1e-12;
    });
  }
  return 0;
}

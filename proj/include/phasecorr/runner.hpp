#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace phasecorr {

// Exit codes: 0 success, 2 validation, 3 numerical failure, 4 partial sweep.
enum class RunStatus : int {
  ok = 0,
  validation_error = 2,
  numerical_error = 3,
  partial = 4,
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string kind;  // synth-phases | simulate-laser | visibility | calibrate
                     // | estimate-q | table1 | table2 | fig3 | fig4
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
  std::vector<std::string> formats = {"json", "csv"};
  int threads = 0;  // 0 = hardware concurrency
  nlohmann::ordered_json raw;  // full effective config

  static ExperimentConfig from_json(const nlohmann::ordered_json& j);
  static ExperimentConfig from_file(const std::filesystem::path& p);
};

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> pulses;
  std::optional<int> threads;
};

// Executes the configured pipeline, writes artifacts plus run_manifest.json
// into the output directory. Identical config + seed reproduce byte-identical
// JSON/CSV outputs (the manifest carries the only timestamps).
RunStatus run_experiment(ExperimentConfig cfg, const RunOverrides& ov = {});

}  // namespace phasecorr

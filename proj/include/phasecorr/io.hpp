#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "phasecorr/laser.hpp"
#include "phasecorr/optics.hpp"
#include "phasecorr/phase_model.hpp"
#include "phasecorr/q_engine.hpp"
#include "phasecorr/visibility.hpp"

namespace phasecorr::io {

using ordered_json = nlohmann::ordered_json;

// 17 significant digits: round-trips any double, keeps outputs byte-stable.
std::string format_double(double v);

std::uint64_t fnv1a(std::span<const char> bytes);
std::uint64_t file_checksum(const std::filesystem::path& p);

void write_text_file(const std::filesystem::path& p, const std::string& body);

// CSV: comma separated, header row, LF endings, UTF-8.
std::string phase_sequence_csv(const PhaseSequence& seq);
std::string detection_records_csv(std::span<const DetectionRecord> records);
std::string sweep_csv(std::span<const SweepPoint> sweep);

ordered_json model_json(const CorrelationModel& m);
CorrelationModel model_from_json(const ordered_json& j);
ordered_json phase_sequence_json(const PhaseSequence& seq);
ordered_json q_result_json(const QResult& r);
ordered_json visibility_json(const VisibilityEstimate& v);
ordered_json calibration_json(const CalibrationResult& c);

// Binary trajectory: magic "PCTRAJ1\n", little-endian header (dt, seed,
// decimation, sample count, params, drive), then columnar doubles
// t / e_re / e_im / n.
void write_trajectory(const std::filesystem::path& p, const FieldTrajectory& t);
FieldTrajectory read_trajectory(const std::filesystem::path& p);
std::string trajectory_csv(const FieldTrajectory& t);
std::string pulse_train_csv(const PulseTrain& pt);

}  // namespace phasecorr::io

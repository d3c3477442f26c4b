#pragma once

// File formats: per-epoch CSV envelopes, deterministic JSON reports and TSV
// sidecars.
//
// Epoch CSV: one file per epoch named `task<T>_rep<R>.csv`, header
// `t,ch1,...,chN`, one row per sample, time in seconds. LF or CRLF line ends.

#include "synten/pipeline.hpp"

#include <filesystem>
#include <string>

namespace synten {

constexpr int kReportSchema = 1;

std::string epoch_file_name(int task_id, int repetition_id);

/// Loads a directory of epoch files, or a single epoch file. Every malformed
/// row, header, file name or channel mismatch is collected and reported
/// together in one DataError. The sample rate is inferred from the time column.
RecordingSet read_epochs(const std::filesystem::path& path);

/// Parses one epoch file body; `origin` prefixes error locations.
Epoch parse_epoch_csv(const std::string& text, const std::string& origin, int task_id, int repetition_id,
                      double* sample_rate = nullptr);

std::string epoch_to_csv(const Epoch& e, double sample_rate);
void write_epochs(const RecordingSet& rs, const std::filesystem::path& dir);

/// Sorted keys, floats with 17 significant digits, `schema` field; byte-for-byte
/// reproducible for identical reports. Wall time is left out unless requested.
std::string report_to_json(const SynergyReport& r, bool include_runtime = false);
SynergyReport report_from_json(const std::string& text);

std::string comparison_to_json(const MethodComparison& c, bool include_runtime = false);
std::string shuffle_to_json(const ShuffleResult& s, bool include_runtime = false);
std::string tensor_to_json(const TensorizedSet& ts);
std::string ground_truth_to_json(const SynthGroundTruth& truth, const SynthSpec& spec);

/// Channel-per-row TSV with one column per synergy.
std::string synergies_tsv(const SynergyReport& r);
/// Sample-per-row TSV with one column per temporal component.
std::string temporal_tsv(const SynergyReport& r);

std::string read_text_file(const std::filesystem::path& p);
void write_text_file(const std::filesystem::path& p, const std::string& text);

}  // namespace synten

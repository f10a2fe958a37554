#pragma once
// Result bundles on disk:
//
//   report.json          metadata, scan rows and evaluation details
//   scan.csv             metric,layer,d,p_mw,p_t,p_bh,valid_mean,invalid_mean
//   curve.csv            multiplier,threshold,accuracy
//   learning_curve.csv   size,mean_accuracy,sd_accuracy,repeats
//
// The CSV files are flat views for plotting; report.json alone round-trips.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attn_spectra/classifier.hpp"
#include "attn_spectra/stats.hpp"

namespace attn_spectra {

struct ResultBundle {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<ScanRow> scan;
  std::optional<EvalReport> eval;

  bool operator==(const ResultBundle&) const = default;
};

nlohmann::json to_json(const ScanRow& row);
ScanRow scan_row_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ThresholdRule& rule);
ThresholdRule rule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalReport& report);
EvalReport eval_from_json(const nlohmann::json& j);

std::string format_scan_csv(std::span<const ScanRow> rows);
/// Parses scan.csv; `rejected` is not part of the flat table and reads false.
std::vector<ScanRow> read_scan_csv(const std::filesystem::path& path);
std::string format_curve_csv(std::span<const CurvePoint> curve);
std::string format_learning_csv(std::span<const LearningPoint> curve);

/// Writes every file atomically under the directory lock. Throws
/// Error(IoFailure) when the directory cannot be created or written.
void write_results(const ResultBundle& bundle, const std::filesystem::path& out_dir);
/// Throws Error(MalformedHeader) on a report.json that does not parse.
ResultBundle read_results(const std::filesystem::path& out_dir);

}  // namespace attn_spectra

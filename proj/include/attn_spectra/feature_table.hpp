#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attn_spectra/corpus.hpp"
#include "attn_spectra/types.hpp"

namespace attn_spectra {

/// One line of diagnostics.csv.
struct DiagnosticRow {
  std::string sample_id;
  int layer = 0;
  std::string metric;
  double value = 0.0;

  bool operator==(const DiagnosticRow&) const = default;
};

/// Header `sample_id,layer,metric,value`; doubles in shortest round-trip form.
std::string format_diagnostics_csv(std::span<const DiagnosticRow> rows);
void write_diagnostics_csv(const std::filesystem::path& path, std::span<const DiagnosticRow> rows);
std::vector<DiagnosticRow> read_diagnostics_csv(const std::filesystem::path& path);

/// Labeled samples × features, stored column-wise. Every sample has a value
/// for every feature.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(std::vector<std::string> ids, std::vector<Label> labels,
               std::vector<FeatureKey> features, std::vector<std::vector<double>> columns);

  /// Pivots long-format rows into a table. Samples without a label in
  /// `corpus` (or labeled `unlabeled`) are dropped, as are samples missing
  /// any feature present for the others; `dropped` receives their ids.
  static FeatureTable from_rows(std::span<const DiagnosticRow> rows, const CorpusManifest& corpus,
                                std::vector<std::string>* dropped = nullptr);

  std::size_t size() const { return ids_.size(); }
  std::size_t feature_count() const { return features_.size(); }

  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<FeatureKey>& features() const { return features_; }
  std::span<const double> column(std::size_t feature) const { return columns_[feature]; }

  std::optional<std::size_t> feature_index(const FeatureKey& key) const;
  /// Throws Error(MissingFeature).
  std::size_t require_feature(const FeatureKey& key) const;

  /// Sorted list of layers present for `metric`.
  std::vector<int> layers_of(std::string_view metric) const;

  /// New table holding only the listed rows, in that order.
  FeatureTable subset(std::span<const std::size_t> rows) const;
  /// New table holding only features whose metric is listed.
  FeatureTable select_metrics(std::span<const std::string> metrics) const;

  std::size_t count(Label label) const;

  std::vector<DiagnosticRow> to_rows() const;

 private:
  std::vector<std::string> ids_;
  std::vector<Label> labels_;
  std::vector<FeatureKey> features_;
  std::vector<std::vector<double>> columns_;
};

}  // namespace attn_spectra

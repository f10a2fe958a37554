#pragma once
// Attention-statistic baselines computed straight from the stored attention.
// Each statistic is computed per row, then averaged uniformly over rows,
// heads and layers.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attn_spectra/archive.hpp"
#include "attn_spectra/feature_table.hpp"

namespace attn_spectra {

/// −Σ w log w in nats, with 0·log 0 = 0.
double row_entropy(std::span<const float> row);
/// Σ_{u,v} |w_u − w_v| / (2 N² μ). Undefined (nullopt) for an all-zero row.
std::optional<double> row_gini(std::span<const float> row);
double row_max(std::span<const float> row);

struct LayerBaselines {
  double entropy = 0.0;
  double gini = 0.0;
  double max_concentration = 0.0;
  std::size_t zero_rows = 0;  // skipped by gini

  bool operator==(const LayerBaselines&) const = default;
};

struct BaselineRecord {
  std::string sample_id;
  std::vector<LayerBaselines> layers;
  double entropy = 0.0;
  double gini = 0.0;
  double max_concentration = 0.0;
  std::size_t zero_rows = 0;

  std::vector<DiagnosticRow> to_rows() const;
  bool operator==(const BaselineRecord&) const = default;
};

LayerBaselines layer_baselines(const TensorArchive& archive, std::size_t layer);
BaselineRecord compute_baselines(const TensorArchive& archive);

double attention_entropy(const TensorArchive& archive);
double gini(const TensorArchive& archive);
double max_concentration(const TensorArchive& archive);

}  // namespace attn_spectra

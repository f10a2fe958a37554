#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "attn_spectra/archive.hpp"
#include "attn_spectra/feature_table.hpp"
#include "attn_spectra/graph.hpp"

namespace attn_spectra {

struct PipelineConfig {
  LaplacianKind laplacian = LaplacianKind::combinatorial;
  Aggregation aggregation = Aggregation::mass_weighted;
  std::optional<std::size_t> hfer_cutoff;  // default floor(N/2)
  // Attention at layer l is paired with the hidden states output by block l.
  std::string layer_pairing = "post-block";

  bool operator==(const PipelineConfig&) const = default;
};

nlohmann::json to_json(const PipelineConfig& config);

struct LayerDiagnostics {
  double fiedler = 0.0;
  double hfer = 0.0;
  double energy = 0.0;
  double entropy = 0.0;
  double smoothness = 0.0;
  std::size_t cutoff = 0;

  bool operator==(const LayerDiagnostics&) const = default;
};

struct DiagnosticsRecord {
  std::string sample_id;
  std::vector<LayerDiagnostics> layers;
  // Smoothness values outside [0, 1] and similar numerical oddities.
  std::vector<std::string> warnings;

  /// Value of a spectral metric; throws Error(MissingFeature) when the
  /// metric is unknown or the layer is absent.
  double value(std::string_view metric, int layer) const;
  std::vector<DiagnosticRow> to_rows() const;

  bool operator==(const DiagnosticsRecord&) const = default;
};

/// Symmetrize each head, aggregate, and build the Laplacian for one layer.
/// Head masses are the raw sums of the stored attention matrices.
LayerGraph layer_graph(const TensorArchive& archive, std::size_t layer,
                       const PipelineConfig& config);

/// Diagnostics of one (graph, signal) pair. For d > N the per-mode energies
/// come from the N×N Gram matrix XXᵀ rather than the N×d coefficients.
LayerDiagnostics diagnose_layer(const LayerGraph& graph, const Eigen::Ref<const Matrix>& signal,
                                std::optional<std::size_t> cutoff,
                                std::vector<std::string>* warnings = nullptr);

/// Runs every layer of a validated archive. Errors from any stage are
/// rethrown with the sample id and layer prepended.
DiagnosticsRecord analyze_sample(const TensorArchive& archive, const PipelineConfig& config);

/// Promotes the row-major float hidden block of `layer` to a double matrix.
Matrix hidden_matrix(const TensorArchive& archive, std::size_t layer);

/// XXᵀ of the hidden block of `layer`, accumulated in double from column
/// chunks so the full N×d promotion is never materialized.
Matrix hidden_gram(const TensorArchive& archive, std::size_t layer);

}  // namespace attn_spectra

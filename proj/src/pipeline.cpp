#include "attn_spectra/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "attn_spectra/error.hpp"
#include "attn_spectra/spectral.hpp"

namespace attn_spectra {

namespace {

using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMajorD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr Eigen::Index kRowBand = 64;
constexpr Eigen::Index kGramChunk = 192;

constexpr double kSmoothnessSlack = 1e-9;

}  // namespace

nlohmann::json to_json(const PipelineConfig& config) {
  return nlohmann::json{
      {"laplacian", std::string(to_string(config.laplacian))},
      {"aggregation", std::string(to_string(config.aggregation))},
      {"hfer_cutoff", config.hfer_cutoff ? nlohmann::json(*config.hfer_cutoff) : nlohmann::json("floor(N/2)")},
      {"layer_pairing", config.layer_pairing},
      {"head_mass", "raw sum of stored attention"},
  };
}

double DiagnosticsRecord::value(std::string_view metric, int layer) const {
  if (layer < 0 || static_cast<std::size_t>(layer) >= layers.size()) {
    fail(ErrorKind::MissingFeature,
         fmt::format("sample '{}' has no layer {} (has {})", sample_id, layer, layers.size()));
  }
  const auto& d = layers[static_cast<std::size_t>(layer)];
  if (metric == metric::fiedler) return d.fiedler;
  if (metric == metric::hfer) return d.hfer;
  if (metric == metric::energy) return d.energy;
  if (metric == metric::entropy) return d.entropy;
  if (metric == metric::smoothness) return d.smoothness;
  fail(ErrorKind::MissingFeature, fmt::format("sample '{}' has no metric '{}'", sample_id, metric));
}

std::vector<DiagnosticRow> DiagnosticsRecord::to_rows() const {
  std::vector<DiagnosticRow> rows;
  rows.reserve(layers.size() * metric::spectral.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (auto m : metric::spectral) {
      rows.push_back({sample_id, static_cast<int>(l), std::string(m), value(m, static_cast<int>(l))});
    }
  }
  return rows;
}

Matrix hidden_matrix(const TensorArchive& archive, std::size_t layer) {
  const auto data = archive.hidden(layer);
  Eigen::Map<const RowMajorF> x(data.data(), static_cast<Eigen::Index>(archive.tokens()),
                                static_cast<Eigen::Index>(archive.hidden_width()));
  return x.cast<double>();
}

LayerGraph layer_graph(const TensorArchive& archive, std::size_t layer,
                       const PipelineConfig& config) {
  const auto n = static_cast<Eigen::Index>(archive.tokens());
  const std::size_t heads = archive.heads();
  std::vector<double> masses(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto data = archive.attention(layer, h);
    masses[h] = Eigen::Map<const Eigen::VectorXf>(data.data(), static_cast<Eigen::Index>(data.size()))
                    .cast<double>()
                    .sum();
  }
  const auto alpha = head_weights(masses, config.aggregation);

  // Symmetrization is linear, so one symmetrize of the weighted head sum
  // equals aggregating the symmetrized heads. Accumulating a band of rows
  // across all heads keeps the band in cache.
  RowMajorD combined(n, n);
  for (Eigen::Index r0 = 0; r0 < n; r0 += kRowBand) {
    const Eigen::Index rows = std::min(kRowBand, n - r0);
    auto band = combined.middleRows(r0, rows);
    band.setZero();
    for (std::size_t h = 0; h < heads; ++h) {
      if (alpha[h] == 0.0) continue;
      band += alpha[h] * Eigen::Map<const RowMajorF>(archive.attention(layer, h).data(), n, n)
                             .middleRows(r0, rows)
                             .cast<double>();
    }
  }
  // Read column-major this is the transpose, which symmetrizes identically.
  return build_laplacian(symmetrize(Eigen::Map<const Matrix>(combined.data(), n, n)), config.laplacian);
}

namespace {

// Shared tail of both routes. `gram` is XXᵀ when present; otherwise the
// coefficients are formed from `signal` directly.
LayerDiagnostics diagnose(const LayerGraph& graph, const Matrix* gram,
                          const Eigen::Ref<const Matrix>* signal, std::optional<std::size_t> cutoff,
                          std::vector<std::string>* warnings) {
  const Spectrum spectrum = eigendecompose(graph);
  const Matrix form = graph.kind == LaplacianKind::symmetric_normalized
                          ? graph.laplacian
                          : combinatorial_laplacian(graph);

  Vector energies;
  double energy = 0.0;
  double norm_sq = 0.0;
  if (gram) {
    energy = form.cwiseProduct(*gram).sum();
    Matrix scaled;
    const Matrix* g = gram;
    if (spectrum.vertex_scale.size()) {
      scaled = spectrum.vertex_scale.asDiagonal() * *gram * spectrum.vertex_scale.asDiagonal();
      g = &scaled;
    }
    norm_sq = g->trace();
    const Matrix projected = *g * spectrum.eigenvectors;
    energies = spectrum.eigenvectors.cwiseProduct(projected).colwise().sum().transpose();
  } else {
    const Matrix coeffs = gft(spectrum, *signal);
    energies = mode_energies(coeffs);
    energy = signal->cwiseProduct(form * *signal).sum();
    norm_sq = signal_norm_sq(spectrum, *signal);
  }
  energies = energies.cwiseMax(0.0);
  const Vector balanced = basis_invariant_energies(spectrum, energies);
  const std::span<const double> e(balanced.data(), static_cast<std::size_t>(balanced.size()));

  LayerDiagnostics d;
  d.cutoff = cutoff.value_or(default_hfer_cutoff(graph.size()));
  d.fiedler = fiedler(spectrum);
  d.hfer = hfer(e, d.cutoff);
  d.energy = energy;
  d.entropy = spectral_entropy(e);
  d.smoothness = smoothness_from_parts(energy, spectrum.lambda_max(), norm_sq);
  if (warnings && (d.smoothness < -kSmoothnessSlack || d.smoothness > 1.0 + kSmoothnessSlack)) {
    warnings->push_back(fmt::format("smoothness {:.17g} outside [0, 1]", d.smoothness));
  }
  return d;
}

Matrix full_gram(Matrix lower) {
  return lower.selfadjointView<Eigen::Lower>();
}

}  // namespace

LayerDiagnostics diagnose_layer(const LayerGraph& graph, const Eigen::Ref<const Matrix>& signal,
                                std::optional<std::size_t> cutoff,
                                std::vector<std::string>* warnings) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  if (signal.rows() != n) {
    fail(ErrorKind::DimMismatch,
         fmt::format("hidden states have {} rows, graph has {} vertices", signal.rows(), n));
  }
  if (signal.cols() > n) {
    // Gram route: O(N²d + N³) instead of O(N²d) twice for wide signals.
    Matrix lower = Matrix::Zero(n, n);
    lower.selfadjointView<Eigen::Lower>().rankUpdate(signal);
    const Matrix gram = full_gram(std::move(lower));
    return diagnose(graph, &gram, nullptr, cutoff, warnings);
  }
  return diagnose(graph, nullptr, &signal, cutoff, warnings);
}

Matrix hidden_gram(const TensorArchive& archive, std::size_t layer) {
  const auto n = static_cast<Eigen::Index>(archive.tokens());
  const auto width = static_cast<Eigen::Index>(archive.hidden_width());
  const Eigen::Map<const RowMajorF> x(archive.hidden(layer).data(), n, width);
  // Promoting a band of columns at a time keeps the double copy in cache.
  Matrix lower = Matrix::Zero(n, n);
  RowMajorD chunk(n, std::min(kGramChunk, width));
  for (Eigen::Index c0 = 0; c0 < width; c0 += kGramChunk) {
    const Eigen::Index cols = std::min(kGramChunk, width - c0);
    chunk.leftCols(cols) = x.middleCols(c0, cols).cast<double>();
    lower.selfadjointView<Eigen::Lower>().rankUpdate(chunk.leftCols(cols));
  }
  return full_gram(std::move(lower));
}

DiagnosticsRecord analyze_sample(const TensorArchive& archive, const PipelineConfig& config) {
  DiagnosticsRecord record;
  record.sample_id = archive.manifest().sample_id;
  record.layers.reserve(archive.layers());
  for (std::size_t l = 0; l < archive.layers(); ++l) {
    try {
      const LayerGraph graph = layer_graph(archive, l, config);
      std::vector<std::string> warnings;
      if (archive.hidden_width() > archive.tokens()) {
        const Matrix gram = hidden_gram(archive, l);
        record.layers.push_back(diagnose(graph, &gram, nullptr, config.hfer_cutoff, &warnings));
      } else {
        record.layers.push_back(
            diagnose_layer(graph, hidden_matrix(archive, l), config.hfer_cutoff, &warnings));
      }
      for (auto& w : warnings) {
        record.warnings.push_back(fmt::format("layer {}: {}", l, w));
      }
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("sample '{}' layer {}: {}", record.sample_id, l, e.detail()));
    }
  }
  return record;
}

}  // namespace attn_spectra

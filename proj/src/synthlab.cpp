#include "attn_spectra/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "attn_spectra/error.hpp"
#include "attn_spectra/random.hpp"

namespace attn_spectra {

std::string_view to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::path: return "path";
    case GraphKind::cycle: return "cycle";
    case GraphKind::complete: return "complete";
    case GraphKind::uniform: return "uniform";
    case GraphKind::two_block: return "two-block";
  }
  return "?";
}

namespace {

void check_graph_args(std::size_t n, double weight) {
  if (n < 2) fail(ErrorKind::BadSize, fmt::format("graph needs N >= 2, got {}", n));
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    fail(ErrorKind::BadSize, fmt::format("edge weight must be positive and finite, got {}", weight));
  }
}

}  // namespace

Matrix make_graph(GraphKind kind, std::size_t n, double weight) {
  check_graph_args(n, weight);
  const auto N = static_cast<Eigen::Index>(n);
  Matrix w = Matrix::Zero(N, N);
  switch (kind) {
    case GraphKind::path:
      for (Eigen::Index i = 0; i + 1 < N; ++i) w(i, i + 1) = w(i + 1, i) = weight;
      break;
    case GraphKind::cycle:
      // Accumulate so that N = 2 gets a doubled edge, matching 2 - 2cos(2πk/N).
      for (Eigen::Index i = 0; i < N; ++i) {
        const Eigen::Index j = (i + 1) % N;
        w(i, j) += weight;
        w(j, i) += weight;
      }
      break;
    case GraphKind::complete:
      w.setConstant(weight);
      w.diagonal().setZero();
      break;
    case GraphKind::uniform:
      w.setConstant(weight);
      break;
    case GraphKind::two_block: {
      const Eigen::Index a = N / 2;
      w.topLeftCorner(a, a).setConstant(weight);
      w.bottomRightCorner(N - a, N - a).setConstant(weight);
      w.diagonal().setZero();
      break;
    }
  }
  return w;
}

std::vector<double> closed_form_spectrum(GraphKind kind, std::size_t n, double weight) {
  check_graph_args(n, weight);
  const double N = static_cast<double>(n);
  std::vector<double> out;
  switch (kind) {
    case GraphKind::path:
      for (std::size_t k = 0; k < n; ++k) {
        out.push_back(2.0 * weight * (1.0 - std::cos(std::numbers::pi * static_cast<double>(k) / N)));
      }
      break;
    case GraphKind::cycle:
      for (std::size_t k = 0; k < n; ++k) {
        out.push_back(2.0 * weight *
                      (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / N)));
      }
      break;
    case GraphKind::complete:
    case GraphKind::uniform:
      out.assign(n, weight * N);
      out[0] = 0.0;
      break;
    case GraphKind::two_block: {
      const std::size_t a = n / 2, b = n - a;
      out.push_back(0.0);
      out.push_back(0.0);
      out.insert(out.end(), a - 1, weight * static_cast<double>(a));
      out.insert(out.end(), b - 1, weight * static_cast<double>(b));
      break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

PlantedCorpus make_planted_corpus(const PlantedCorpusSpec& spec) {
  if (spec.n_per_class < 4) {
    fail(ErrorKind::BadSpec, fmt::format("planted corpus needs n >= 4 per class, got {}",
                                         spec.n_per_class));
  }
  if (spec.metrics.empty() || spec.layers < 1) fail(ErrorKind::BadSpec, "empty feature grid");
  if (!std::isfinite(spec.location) || !(spec.noise_sd > 0.0) || !std::isfinite(spec.noise_sd)) {
    fail(ErrorKind::BadSpec, "planted location must be finite and noise sd positive");
  }
  std::vector<FeatureKey> grid;
  for (const auto& m : spec.metrics) {
    for (int l = 0; l < spec.layers; ++l) grid.push_back({m, l});
  }
  // Per-feature class shift: valid mean = location + shift, invalid = location - shift.
  std::vector<double> shift(grid.size(), 0.0);
  for (const auto& cell : spec.informative) {
    if (!std::isfinite(cell.effect)) fail(ErrorKind::BadSpec, "planted effect must be finite");
    auto it = std::find(grid.begin(), grid.end(), FeatureKey{cell.metric, cell.layer});
    if (it == grid.end()) {
      fail(ErrorKind::BadSpec, fmt::format("planted cell {}@L{} is outside the grid", cell.metric,
                                           cell.layer));
    }
    const double half = cell.effect * spec.noise_sd / 2.0;
    shift[static_cast<std::size_t>(it - grid.begin())] = cell.valid_lower ? -half : half;
  }

  Rng rng(spec.seed);
  PlantedCorpus out;
  std::vector<DiagnosticRow> rows;
  rows.reserve(2 * spec.n_per_class * grid.size());
  for (std::size_t i = 0; i < 2 * spec.n_per_class; ++i) {
    const bool valid = i < spec.n_per_class;
    CorpusEntry entry;
    entry.id = fmt::format("s{:05d}", i);
    entry.label = valid ? Label::valid : Label::invalid;
    for (std::size_t f = 0; f < grid.size(); ++f) {
      const double mean = spec.location + (valid ? shift[f] : -shift[f]);
      rows.push_back({entry.id, grid[f].layer, grid[f].metric,
                      mean + spec.noise_sd * standard_normal(rng)});
    }
    out.corpus.entries.push_back(std::move(entry));
  }
  out.table = FeatureTable::from_rows(rows, out.corpus);
  return out;
}

std::string_view to_string(AttentionRecipe recipe) {
  switch (recipe) {
    case AttentionRecipe::uniform: return "uniform";
    case AttentionRecipe::onehot: return "onehot";
    case AttentionRecipe::banded: return "banded";
    case AttentionRecipe::random_stochastic: return "random-stochastic";
  }
  return "?";
}

AttentionRecipe parse_recipe(std::string_view text) {
  if (text == "uniform") return AttentionRecipe::uniform;
  if (text == "onehot") return AttentionRecipe::onehot;
  if (text == "banded") return AttentionRecipe::banded;
  if (text == "random-stochastic" || text == "random") return AttentionRecipe::random_stochastic;
  fail(ErrorKind::BadSpec, fmt::format("unknown attention recipe '{}'", text));
}

TensorArchive make_synthetic_archive(const SyntheticArchiveSpec& spec) {
  if (spec.tokens == 0 || spec.layers == 0 || spec.heads == 0 || spec.hidden_width == 0) {
    fail(ErrorKind::BadSize, fmt::format("synthetic archive dims must be >= 1 (N={}, L={}, H={}, d={})",
                                         spec.tokens, spec.layers, spec.heads, spec.hidden_width));
  }
  if (spec.recipe == AttentionRecipe::banded && spec.band_width == 0) {
    fail(ErrorKind::BadSize, "band width must be >= 1");
  }
  const std::size_t n = spec.tokens, d = spec.hidden_width;
  ArchiveManifest manifest;
  manifest.sample_id = spec.sample_id;
  manifest.label = spec.label;
  manifest.source = fmt::format("synthlab:{}", to_string(spec.recipe));
  manifest.tokens = n;
  manifest.layers = spec.layers;
  manifest.heads = spec.heads;
  manifest.hidden_width = d;
  manifest.model = "synthlab";

  Rng rng(spec.seed);
  std::map<std::string, TensorArray> arrays;
  std::vector<double> row(n);
  for (std::size_t l = 0; l < spec.layers; ++l) {
    TensorArray attn;
    attn.shape = {spec.heads, n, n};
    attn.data.assign(spec.heads * n * n, 0.0f);
    for (std::size_t h = 0; h < spec.heads; ++h) {
      float* block = attn.data.data() + h * n * n;
      for (std::size_t i = 0; i < n; ++i) {
        float* out = block + i * n;
        switch (spec.recipe) {
          case AttentionRecipe::uniform:
            std::fill(out, out + n, static_cast<float>(1.0 / static_cast<double>(n)));
            break;
          case AttentionRecipe::onehot:
            out[i] = 1.0f;
            break;
          case AttentionRecipe::banded:
          case AttentionRecipe::random_stochastic: {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              row[j] = 1.0 - uniform01(rng);  // (0, 1]
              const std::size_t gap = i > j ? i - j : j - i;
              if (spec.recipe == AttentionRecipe::banded && gap >= spec.band_width) row[j] = 0.0;
              sum += row[j];
            }
            for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<float>(row[j] / sum);
            break;
          }
        }
      }
    }
    arrays.emplace(attention_array_name(l), std::move(attn));

    TensorArray hidden;
    hidden.shape = {n, d};
    hidden.data.resize(n * d);
    for (auto& x : hidden.data) x = static_cast<float>(standard_normal(rng) + spec.dc_offset);
    arrays.emplace(hidden_array_name(l), std::move(hidden));
  }
  return TensorArchive::create(std::move(manifest), std::move(arrays));
}

}  // namespace attn_spectra

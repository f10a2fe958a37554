#pragma once
// Synthetic inputs with known answers: analytic graphs, planted two-class
// feature tables, and archives built from simple attention recipes.

#include <cstdint>
#include <string>
#include <vector>

#include "attn_spectra/archive.hpp"
#include "attn_spectra/corpus.hpp"
#include "attn_spectra/feature_table.hpp"
#include "attn_spectra/graph.hpp"

namespace attn_spectra {

enum class GraphKind { path, cycle, complete, uniform, two_block };
std::string_view to_string(GraphKind kind);

/// Symmetric weight matrix. `uniform` is the all-`weight` matrix including
/// the diagonal (what uniform attention symmetrizes to); `two_block` is two
/// disconnected complete blocks of sizes floor(N/2) and ceil(N/2). Raises
/// BadSize for N < 2 or a non-positive weight.
Matrix make_graph(GraphKind kind, std::size_t n, double weight = 1.0);

/// Ascending combinatorial-Laplacian spectrum of make_graph(kind, n, weight).
std::vector<double> closed_form_spectrum(GraphKind kind, std::size_t n, double weight = 1.0);

struct PlantedCell {
  std::string metric;
  int layer = 0;
  double effect = 0.0;       // Cohen's d between the class means
  bool valid_lower = true;   // valid mean sits below the invalid mean

  bool operator==(const PlantedCell&) const = default;
};

struct PlantedCorpusSpec {
  std::size_t n_per_class = 227;
  std::vector<std::string> metrics = {"fiedler", "hfer", "energy", "entropy", "smoothness"};
  int layers = 32;
  std::vector<PlantedCell> informative;
  double location = 0.2515;  // midpoint of the class means
  double noise_sd = 0.05433;
  std::uint64_t seed = 0;
};

struct PlantedCorpus {
  CorpusManifest corpus;  // label-only entries
  FeatureTable table;
};

/// Every cell is N(location, sd²); informative cells shift each class by
/// ±effect·sd/2. The first n_per_class samples are valid. Raises BadSpec for
/// n < 4, non-finite parameters, or cells outside the grid.
PlantedCorpus make_planted_corpus(const PlantedCorpusSpec& spec);

enum class AttentionRecipe { uniform, onehot, banded, random_stochastic };
std::string_view to_string(AttentionRecipe recipe);
AttentionRecipe parse_recipe(std::string_view text);

struct SyntheticArchiveSpec {
  std::string sample_id = "synthetic";
  Label label = Label::unlabeled;
  std::size_t tokens = 16;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t hidden_width = 8;
  AttentionRecipe recipe = AttentionRecipe::random_stochastic;
  std::size_t band_width = 4;  // keys with |i - j| < width, for `banded`
  double dc_offset = 0.0;      // added to every hidden entry
  std::uint64_t seed = 0;
};

/// Attention rows are row-stochastic (`banded` draws the same weights as
/// `random_stochastic`, masks outside the window and renormalizes); hidden
/// states are standard normal plus the offset. Raises BadSize on zero dims.
TensorArchive make_synthetic_archive(const SyntheticArchiveSpec& spec);

}  // namespace attn_spectra

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "attn_spectra/spectral.hpp"
#include "attn_spectra/stats.hpp"
#include "attn_spectra/synthlab.hpp"
#include "helpers.hpp"

using namespace attn_spectra;
using testing::throws_kind;

TEST_SUITE("synthlab") {

TEST_CASE("analytic graphs") {
  const auto cycle = closed_form_spectrum(GraphKind::cycle, 4);
  REQUIRE(cycle.size() == 4);
  CHECK(cycle[0] == doctest::Approx(0.0));
  CHECK(cycle[1] == doctest::Approx(2.0));
  CHECK(cycle[2] == doctest::Approx(2.0));
  CHECK(cycle[3] == doctest::Approx(4.0));

  const Matrix w = make_graph(GraphKind::cycle, 4);
  CHECK(w.sum() == 8.0);
  CHECK(w.diagonal().sum() == 0.0);
  CHECK(w(0, 3) == 1.0);

  const Matrix blocks = make_graph(GraphKind::two_block, 5);
  CHECK(testing::components(blocks) == 2);
  CHECK(make_graph(GraphKind::uniform, 3, 0.5) == Matrix::Constant(3, 3, 0.5));

  for (auto kind : {GraphKind::path, GraphKind::cycle, GraphKind::complete, GraphKind::two_block}) {
    CHECK(throws_kind([&] { make_graph(kind, 1); }, ErrorKind::BadSize));
    CHECK(throws_kind([&] { make_graph(kind, 4, 0.0); }, ErrorKind::BadSize));
  }
}

TEST_CASE("closed forms agree with the eigensolver") {
  for (auto kind : {GraphKind::path, GraphKind::cycle, GraphKind::complete, GraphKind::uniform,
                    GraphKind::two_block}) {
    for (std::size_t n : {2u, 3u, 7u, 20u}) {
      const auto spectrum =
          eigendecompose(build_laplacian(make_graph(kind, n, 0.7), LaplacianKind::combinatorial));
      const auto expected = closed_form_spectrum(kind, n, 0.7);
      for (std::size_t k = 0; k < n; ++k) {
        CHECK(std::abs(spectrum.eigenvalues[static_cast<Eigen::Index>(k)] - expected[k]) < 1e-9);
      }
    }
  }
}

TEST_CASE("planted corpus") {
  PlantedCorpusSpec spec;
  spec.n_per_class = 500;
  spec.layers = 4;
  spec.informative = {{"hfer", 2, 3.0, true}, {"energy", 1, 1.0, false}};
  spec.seed = 9;
  const auto p = make_planted_corpus(spec);
  CHECK(p.table.size() == 1000);
  CHECK(p.table.feature_count() == 20);
  CHECK(p.table.count(Label::valid) == 500);
  CHECK(p.table.labels().front() == Label::valid);
  CHECK(p.table.labels().back() == Label::invalid);
  CHECK(p.corpus.entries.size() == 1000);

  auto effect = [&](const FeatureKey& key) {
    const auto col = p.table.column(p.table.require_feature(key));
    const std::vector<double> valid(col.begin(), col.begin() + 500), invalid(col.begin() + 500, col.end());
    return cohens_d(valid, invalid);
  };
  CHECK(std::abs(effect({"hfer", 2}) - (-3.0)) <= 0.15);
  CHECK(std::abs(effect({"energy", 1}) - 1.0) <= 0.15);
  CHECK(std::abs(effect({"fiedler", 0})) <= 0.2);

  const auto again = make_planted_corpus(spec);
  CHECK(again.table.to_rows() == p.table.to_rows());
  spec.seed = 10;
  CHECK(make_planted_corpus(spec).table.to_rows() != p.table.to_rows());

  spec.n_per_class = 3;
  CHECK(throws_kind([&] { make_planted_corpus(spec); }, ErrorKind::BadSpec));
  spec.n_per_class = 10;
  spec.informative = {{"hfer", 4, 1.0, true}};
  CHECK(throws_kind([&] { make_planted_corpus(spec); }, ErrorKind::BadSpec));
  spec.informative = {{"nonsense", 0, 1.0, true}};
  CHECK(throws_kind([&] { make_planted_corpus(spec); }, ErrorKind::BadSpec));
}

TEST_CASE("synthetic archives") {
  SyntheticArchiveSpec spec;
  spec.tokens = 10;
  spec.layers = 3;
  spec.heads = 2;
  spec.hidden_width = 6;
  spec.seed = 5;
  for (auto recipe : {AttentionRecipe::uniform, AttentionRecipe::onehot, AttentionRecipe::banded,
                      AttentionRecipe::random_stochastic}) {
    spec.recipe = recipe;
    const auto a = make_synthetic_archive(spec);
    for (std::size_t l = 0; l < 3; ++l) {
      for (std::size_t h = 0; h < 2; ++h) {
        const auto w = a.attention(l, h);
        for (std::size_t i = 0; i < 10; ++i) {
          double sum = 0.0;
          for (std::size_t j = 0; j < 10; ++j) {
            CHECK(w[i * 10 + j] >= 0.0f);
            if (recipe == AttentionRecipe::banded && (i > j ? i - j : j - i) >= spec.band_width) {
              CHECK(w[i * 10 + j] == 0.0f);
            }
            sum += w[i * 10 + j];
          }
          CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
      }
    }
  }

  // A band as wide as the sequence is the unmasked recipe.
  spec.recipe = AttentionRecipe::banded;
  spec.band_width = 10;
  const auto wide = make_synthetic_archive(spec);
  spec.recipe = AttentionRecipe::random_stochastic;
  const auto plain = make_synthetic_archive(spec);
  CHECK(wide.arrays() == plain.arrays());

  spec.dc_offset = 100.0;
  const auto shifted = make_synthetic_archive(spec);
  const auto x = shifted.hidden(0);
  double mean = 0.0;
  for (float v : x) mean += v;
  CHECK(mean / static_cast<double>(x.size()) == doctest::Approx(100.0).epsilon(0.01));

  spec.tokens = 0;
  CHECK(throws_kind([&] { make_synthetic_archive(spec); }, ErrorKind::BadSize));
  spec.tokens = 4;
  spec.recipe = AttentionRecipe::banded;
  spec.band_width = 0;
  CHECK(throws_kind([&] { make_synthetic_archive(spec); }, ErrorKind::BadSize));
}

TEST_CASE("recipe names") {
  for (auto r : {AttentionRecipe::uniform, AttentionRecipe::onehot, AttentionRecipe::banded,
                 AttentionRecipe::random_stochastic}) {
    CHECK(parse_recipe(to_string(r)) == r);
  }
  CHECK(throws_kind([] { parse_recipe("sparkly"); }, ErrorKind::BadSpec));
}

}

#include <doctest.h>

#include <vector>

#include "attn_spectra/graph.hpp"
#include "attn_spectra/pipeline.hpp"
#include "attn_spectra/spectral.hpp"
#include "attn_spectra/synthlab.hpp"
#include "helpers.hpp"

using namespace attn_spectra;
using testing::throws_kind;

TEST_SUITE("graph") {

TEST_CASE("symmetrize examples") {
  Matrix a(2, 2);
  a << 1, 0, 0.5, 0.5;
  Matrix expected(2, 2);
  expected << 1, 0.25, 0.25, 0.5;
  CHECK(symmetrize(a) == expected);

  Matrix s(3, 3);
  s << 0.2, 0.3, 0.5, 0.3, 0.4, 0.3, 0.5, 0.3, 0.2;
  CHECK(symmetrize(s) == s);

  const Matrix u = Matrix::Constant(5, 5, 0.2);
  CHECK(symmetrize(u) == u);

  CHECK(throws_kind([] { symmetrize(Matrix::Zero(2, 3)); }, ErrorKind::NonSquare));
}

TEST_CASE("symmetrize is exactly symmetric") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix w = symmetrize(testing::random_stochastic(13, rng));
    CHECK(w == w.transpose());
  }
}

TEST_CASE("aggregate_heads examples") {
  Rng rng(11);
  const Matrix w1 = symmetrize(testing::random_stochastic(4, rng));
  const Matrix w2 = symmetrize(testing::random_stochastic(4, rng));
  const std::vector<Matrix> heads = {w1, w2};

  const std::vector<double> equal = {4.0, 4.0};
  const Matrix mean = 0.5 * (w1 + w2);
  CHECK((aggregate_heads(heads, equal, Aggregation::mass_weighted) - mean).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((aggregate_heads(heads, equal, Aggregation::uniform) - mean).cwiseAbs().maxCoeff() < 1e-15);

  const std::vector<double> two_one = {2.0, 1.0};
  const Matrix weighted = (2.0 * w1 + w2) / 3.0;
  CHECK((aggregate_heads(heads, two_one, Aggregation::mass_weighted) - weighted).cwiseAbs().maxCoeff() <
        1e-15);
  CHECK(aggregate_heads(heads, two_one, Aggregation::max_head) == w1);
  // Ties go to the lower index.
  CHECK(aggregate_heads(heads, equal, Aggregation::max_head) == w1);

  const std::vector<Matrix> single = {w2};
  const std::vector<double> mass = {3.5};
  for (auto scheme : {Aggregation::mass_weighted, Aggregation::uniform, Aggregation::max_head}) {
    CHECK((aggregate_heads(single, mass, scheme) - w2).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("aggregate_heads errors") {
  const std::vector<Matrix> none;
  const std::vector<double> no_mass;
  CHECK(throws_kind([&] { aggregate_heads(none, no_mass, Aggregation::uniform); },
                    ErrorKind::EmptyHeadList));
  const std::vector<Matrix> heads = {Matrix::Zero(3, 3), Matrix::Zero(3, 3)};
  const std::vector<double> zero = {0.0, 0.0};
  CHECK(throws_kind([&] { aggregate_heads(heads, zero, Aggregation::mass_weighted); },
                    ErrorKind::MassAllZero));
  CHECK_NOTHROW(aggregate_heads(heads, zero, Aggregation::uniform));
  const std::vector<double> negative = {1.0, -1.0};
  CHECK(throws_kind([&] { aggregate_heads(heads, negative, Aggregation::uniform); },
                    ErrorKind::NegativeWeight));
}

TEST_CASE("head weights sum to one") {
  const std::vector<double> masses = {1.0, 2.5, 0.0, 7.0};
  for (auto scheme : {Aggregation::mass_weighted, Aggregation::uniform, Aggregation::max_head}) {
    const auto alpha = head_weights(masses, scheme);
    double sum = 0.0;
    for (double a : alpha) {
      CHECK(a >= 0.0);
      sum += a;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("build_laplacian examples") {
  const Matrix u = Matrix::Constant(4, 4, 0.25);
  const auto g = build_laplacian(u, LaplacianKind::combinatorial);
  const Matrix expected = Matrix::Identity(4, 4) - Matrix::Constant(4, 4, 0.25);
  CHECK((g.laplacian - expected).cwiseAbs().maxCoeff() < 1e-15);

  Matrix path(3, 3);
  path << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  Matrix lp(3, 3);
  lp << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK(build_laplacian(path, LaplacianKind::combinatorial).laplacian == lp);

  Matrix isolated = Matrix::Zero(3, 3);
  isolated(0, 1) = isolated(1, 0) = 1.0;
  for (auto kind : {LaplacianKind::symmetric_normalized, LaplacianKind::random_walk}) {
    const auto gi = build_laplacian(isolated, kind);
    CHECK(gi.laplacian.row(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(gi.laplacian.col(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(gi.laplacian(0, 0) == doctest::Approx(1.0));
    CHECK(gi.laplacian(0, 1) == doctest::Approx(-1.0));
  }
}

TEST_CASE("build_laplacian rejects bad weights") {
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 1) = neg(1, 0) = -0.5;
  CHECK(throws_kind([&] { build_laplacian(neg, LaplacianKind::combinatorial); },
                    ErrorKind::NegativeWeight));
  Matrix asym = Matrix::Zero(2, 2);
  asym(0, 1) = 1.0;
  CHECK(throws_kind([&] { build_laplacian(asym, LaplacianKind::combinatorial); },
                    ErrorKind::NotSymmetric));
  CHECK(throws_kind([] { build_laplacian(Matrix::Zero(2, 3), LaplacianKind::combinatorial); },
                    ErrorKind::NonSquare));
}

TEST_CASE("normalized variants") {
  Rng rng(3);
  const Matrix w = testing::random_weights(9, 0.6, rng);
  const auto sym = build_laplacian(w, LaplacianKind::symmetric_normalized);
  const auto rw = build_laplacian(w, LaplacianKind::random_walk);
  const Vector d = w.rowwise().sum();
  for (Eigen::Index i = 0; i < 9; ++i) {
    for (Eigen::Index j = 0; j < 9; ++j) {
      const double id = i == j ? 1.0 : 0.0;
      if (d[i] == 0.0 || d[j] == 0.0) continue;
      CHECK(sym.laplacian(i, j) == doctest::Approx(id - w(i, j) / std::sqrt(d[i] * d[j])).epsilon(1e-12));
      CHECK(rw.laplacian(i, j) == doctest::Approx(id - w(i, j) / d[i]).epsilon(1e-12));
    }
  }
  CHECK(sym.laplacian == sym.laplacian.transpose());
}

TEST_CASE("quadratic form equals the pairwise sum") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 20;
    const Matrix w = testing::random_weights(n, 0.5, rng);
    const auto g = build_laplacian(w, LaplacianKind::combinatorial);
    const Matrix x = testing::random_signal(n, 1, rng);
    const double form = (x.transpose() * g.laplacian * x)(0, 0);
    CHECK(testing::relative_gap(form, testing::pairwise_energy(w, x)) < 1e-8);
    CHECK((g.laplacian - testing::laplacian_by_loops(w)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("constant vector is in the kernel") {
  Rng rng(8);
  for (std::size_t n : {2u, 5u, 17u, 40u}) {
    const auto g = build_laplacian(testing::random_weights(n, 0.4, rng), LaplacianKind::combinatorial);
    const Vector ones = Vector::Ones(static_cast<Eigen::Index>(n));
    CHECK((g.laplacian * ones).cwiseAbs().maxCoeff() <= 1e-9 * static_cast<double>(n));
  }
}

TEST_CASE("zero eigenvalue multiplicity counts components") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    // Block diagonal: up to four dense blocks, so each block is connected.
    const std::size_t blocks = 1 + trial % 4;
    std::vector<std::size_t> sizes;
    std::size_t n = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
      sizes.push_back(1 + static_cast<std::size_t>(uniform01(rng) * 6));
      n += sizes.back();
    }
    Matrix w = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::size_t offset = 0;
    for (auto s : sizes) {
      const Matrix block = testing::random_weights(s, 1.0, rng);
      w.block(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(offset),
              static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = block;
      offset += s;
    }
    const auto spectrum = eigendecompose(build_laplacian(w, LaplacianKind::combinatorial));
    std::size_t zeros = 0;
    for (Eigen::Index k = 0; k < spectrum.eigenvalues.size(); ++k) {
      zeros += spectrum.eigenvalues[k] <= 1e-9 * std::max(1.0, spectrum.lambda_max());
    }
    CHECK(zeros == blocks);
    CHECK(testing::components(w) == blocks);
  }
}

TEST_CASE("gershgorin bound") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix w = testing::random_weights(3 + trial, 0.5, rng);
    const auto g = build_laplacian(w, LaplacianKind::combinatorial);
    const auto spectrum = eigendecompose(g);
    CHECK(spectrum.lambda_max() <= 2.0 * g.degrees.maxCoeff() * (1.0 + 1e-12));
  }
}

TEST_CASE("layer graph matches per-head symmetrize then aggregate") {
  for (auto scheme : {Aggregation::mass_weighted, Aggregation::uniform, Aggregation::max_head}) {
    SyntheticArchiveSpec spec;
    spec.tokens = 9;
    spec.heads = 3;
    spec.layers = 2;
    spec.seed = 17;
    const auto archive = make_synthetic_archive(spec);
    PipelineConfig config;
    config.aggregation = scheme;
    const auto fused = layer_graph(archive, 1, config);

    std::vector<Matrix> heads;
    std::vector<double> masses;
    for (std::size_t h = 0; h < spec.heads; ++h) {
      const auto data = archive.attention(1, h);
      Matrix a(9, 9);
      double mass = 0.0;
      for (Eigen::Index i = 0; i < 9; ++i) {
        for (Eigen::Index j = 0; j < 9; ++j) {
          a(i, j) = data[static_cast<std::size_t>(i * 9 + j)];
          mass += a(i, j);
        }
      }
      heads.push_back(symmetrize(a));
      masses.push_back(mass);
    }
    const Matrix reference = aggregate_heads(heads, masses, scheme);
    CHECK((fused.weights - reference).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(fused.weights == fused.weights.transpose());
  }
}

TEST_CASE("parse names") {
  CHECK(parse_laplacian_kind("sym") == LaplacianKind::symmetric_normalized);
  CHECK(parse_laplacian_kind("rw") == LaplacianKind::random_walk);
  CHECK(parse_laplacian_kind("combinatorial") == LaplacianKind::combinatorial);
  CHECK(parse_aggregation("mass") == Aggregation::mass_weighted);
  CHECK(parse_aggregation("max") == Aggregation::max_head);
  CHECK(parse_aggregation(to_string(Aggregation::uniform)) == Aggregation::uniform);
}

}

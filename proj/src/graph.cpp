#include "attn_spectra/graph.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "attn_spectra/error.hpp"

namespace attn_spectra {

namespace {

constexpr double kSymmetryTolerance = 1e-12;

Vector inverse_sqrt_degrees(const Vector& degrees) {
  Vector out(degrees.size());
  for (Eigen::Index i = 0; i < degrees.size(); ++i) {
    out[i] = degrees[i] > 0.0 ? 1.0 / std::sqrt(degrees[i]) : 0.0;
  }
  return out;
}

}  // namespace

std::string_view to_string(LaplacianKind kind) {
  switch (kind) {
    case LaplacianKind::combinatorial: return "combinatorial";
    case LaplacianKind::symmetric_normalized: return "symmetric-normalized";
    case LaplacianKind::random_walk: return "random-walk";
  }
  return "combinatorial";
}

std::string_view to_string(Aggregation scheme) {
  switch (scheme) {
    case Aggregation::mass_weighted: return "mass-weighted";
    case Aggregation::uniform: return "uniform";
    case Aggregation::max_head: return "max-head";
  }
  return "mass-weighted";
}

LaplacianKind parse_laplacian_kind(std::string_view text) {
  if (text == "combinatorial") return LaplacianKind::combinatorial;
  if (text == "sym" || text == "symmetric-normalized") return LaplacianKind::symmetric_normalized;
  if (text == "rw" || text == "random-walk") return LaplacianKind::random_walk;
  fail(ErrorKind::BadSpec, fmt::format("unknown Laplacian kind '{}'", text));
}

Aggregation parse_aggregation(std::string_view text) {
  if (text == "mass" || text == "mass-weighted") return Aggregation::mass_weighted;
  if (text == "uniform") return Aggregation::uniform;
  if (text == "max" || text == "max-head") return Aggregation::max_head;
  fail(ErrorKind::BadSpec, fmt::format("unknown aggregation '{}'", text));
}

Matrix symmetrize(const Eigen::Ref<const Matrix>& attention) {
  if (attention.rows() != attention.cols()) {
    fail(ErrorKind::NonSquare,
         fmt::format("attention is {}x{}", attention.rows(), attention.cols()));
  }
  const auto n = attention.rows();
  Matrix w(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double v = 0.5 * (attention(i, j) + attention(j, i));
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return w;
}

std::vector<double> head_weights(std::span<const double> masses, Aggregation scheme) {
  if (masses.empty()) fail(ErrorKind::EmptyHeadList, "no heads to aggregate");
  for (std::size_t h = 0; h < masses.size(); ++h) {
    if (!(masses[h] >= 0.0)) {
      fail(ErrorKind::NegativeWeight, fmt::format("head {} has attention mass {}", h, masses[h]));
    }
  }
  std::vector<double> alpha(masses.size(), 0.0);
  switch (scheme) {
    case Aggregation::max_head: {
      std::size_t best = 0;
      for (std::size_t h = 1; h < masses.size(); ++h) {
        if (masses[h] > masses[best]) best = h;
      }
      alpha[best] = 1.0;
      break;
    }
    case Aggregation::uniform:
      std::fill(alpha.begin(), alpha.end(), 1.0 / static_cast<double>(masses.size()));
      break;
    case Aggregation::mass_weighted: {
      double total = 0.0;
      for (double s : masses) total += s;
      if (total <= 0.0) fail(ErrorKind::MassAllZero, "every head has zero attention mass");
      for (std::size_t h = 0; h < masses.size(); ++h) alpha[h] = masses[h] / total;
      break;
    }
  }
  return alpha;
}

Matrix aggregate_heads(std::span<const Matrix> heads, std::span<const double> masses,
                       Aggregation scheme) {
  if (heads.empty()) fail(ErrorKind::EmptyHeadList, "no heads to aggregate");
  if (masses.size() != heads.size()) {
    fail(ErrorKind::DimMismatch,
         fmt::format("{} heads but {} attention masses", heads.size(), masses.size()));
  }
  const auto n = heads.front().rows();
  for (std::size_t h = 0; h < heads.size(); ++h) {
    if (heads[h].rows() != n || heads[h].cols() != n) {
      fail(ErrorKind::DimMismatch, fmt::format("head {} is {}x{}, expected {}x{}", h,
                                               heads[h].rows(), heads[h].cols(), n, n));
    }
  }
  const auto alpha = head_weights(masses, scheme);
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t h = 0; h < heads.size(); ++h) {
    if (alpha[h] != 0.0) out += alpha[h] * heads[h];
  }
  return out;
}

LayerGraph build_laplacian(Matrix weights, LaplacianKind kind) {
  if (weights.rows() != weights.cols()) {
    fail(ErrorKind::NonSquare, fmt::format("weights are {}x{}", weights.rows(), weights.cols()));
  }
  const auto n = weights.rows();
  const double scale = std::max(1.0, weights.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(weights(i, j) >= 0.0)) {
        fail(ErrorKind::NegativeWeight,
             fmt::format("weight ({},{}) = {} is negative or not a number", i, j, weights(i, j)));
      }
      if (std::abs(weights(i, j) - weights(j, i)) > kSymmetryTolerance * scale) {
        fail(ErrorKind::NotSymmetric, fmt::format("weights ({},{}) and ({},{}) differ", i, j, j, i));
      }
    }
  }

  LayerGraph graph;
  graph.kind = kind;
  graph.degrees = weights.rowwise().sum();
  graph.weights = std::move(weights);
  switch (kind) {
    case LaplacianKind::combinatorial:
      graph.laplacian = combinatorial_laplacian(graph);
      break;
    case LaplacianKind::symmetric_normalized:
      graph.laplacian = normalized_laplacian(graph);
      break;
    case LaplacianKind::random_walk: {
      Vector inv(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        inv[i] = graph.degrees[i] > 0.0 ? 1.0 / graph.degrees[i] : 0.0;
      }
      graph.laplacian = inv.asDiagonal() * combinatorial_laplacian(graph);
      break;
    }
  }
  return graph;
}

Matrix combinatorial_laplacian(const LayerGraph& graph) {
  Matrix l = -graph.weights;
  l.diagonal() += graph.degrees;
  return l;
}

Matrix normalized_laplacian(const LayerGraph& graph) {
  const Vector s = inverse_sqrt_degrees(graph.degrees);
  Matrix l = s.asDiagonal() * combinatorial_laplacian(graph) * s.asDiagonal();
  // The diagonal scaling can leave rounding-level asymmetry.
  return 0.5 * (l + l.transpose());
}

}  // namespace attn_spectra

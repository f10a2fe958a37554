#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace attn_spectra {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class LaplacianKind { combinatorial, symmetric_normalized, random_walk };
enum class Aggregation { mass_weighted, uniform, max_head };

std::string_view to_string(LaplacianKind kind);
std::string_view to_string(Aggregation scheme);
/// Accepts the long names and the CLI shorthands (sym, rw, mass, max).
LaplacianKind parse_laplacian_kind(std::string_view text);
Aggregation parse_aggregation(std::string_view text);

/// Head-aggregated, symmetrized attention graph of one layer.
///
/// `laplacian` holds the matrix of the requested kind. Zero-degree vertices
/// keep an all-zero row and column in every kind (D^{-1/2} and D^{-1} are
/// taken as 0 there), so each kind stays positive semidefinite.
/// The random-walk matrix I - D^{-1}W is not symmetric; spectral routines
/// work with its symmetric similar form instead.
struct LayerGraph {
  Matrix weights;
  Vector degrees;
  LaplacianKind kind = LaplacianKind::combinatorial;
  Matrix laplacian;

  std::size_t size() const { return static_cast<std::size_t>(weights.rows()); }
};

/// (A + Aᵀ)/2, filled one upper-triangle entry at a time so the result is
/// exactly symmetric.
Matrix symmetrize(const Eigen::Ref<const Matrix>& attention);

/// Weighted sum of symmetric per-head graphs.
///   mass_weighted: alpha_h = s_h / sum_g s_g
///   uniform:       alpha_h = 1 / H
///   max_head:      the head with the largest s_h (lowest index on ties)
Matrix aggregate_heads(std::span<const Matrix> heads, std::span<const double> masses,
                       Aggregation scheme);

/// The alpha_h used by aggregate_heads. Raises EmptyHeadList, NegativeWeight
/// and (mass_weighted) MassAllZero.
std::vector<double> head_weights(std::span<const double> masses, Aggregation scheme);

LayerGraph build_laplacian(Matrix weights, LaplacianKind kind);

/// Combinatorial D - W, independent of the graph's kind.
Matrix combinatorial_laplacian(const LayerGraph& graph);
/// D^{-1/2} (D - W) D^{-1/2}; the symmetric form shared by the normalized kinds.
Matrix normalized_laplacian(const LayerGraph& graph);

}  // namespace attn_spectra

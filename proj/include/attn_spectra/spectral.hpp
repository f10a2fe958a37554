#pragma once

// Eigendecomposition of layer Laplacians, the graph Fourier transform of
// hidden-state signals, and the per-layer spectral diagnostics.
//
// Signals are N×d matrices: each of the d columns is a signal on the N token
// vertices. All quantities are computed in double precision.

#include <optional>
#include <span>

#include "attn_spectra/graph.hpp"

namespace attn_spectra {

/// Eigenpairs of a layer Laplacian, eigenvalues ascending.
///
/// For the random-walk kind the pairs solve the generalized problem
/// (D - W) v = lambda D v. They are stored as orthonormal eigenvectors U of
/// the symmetric normalized Laplacian together with `vertex_scale` = D^{1/2};
/// the transform then acts on D^{1/2} X, so every identity below holds in the
/// degree-weighted norm. For the other kinds `vertex_scale` is empty.
struct Spectrum {
  Vector eigenvalues;
  Matrix eigenvectors;
  Vector vertex_scale;
  LaplacianKind kind = LaplacianKind::combinatorial;

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  double lambda_max() const { return eigenvalues.size() ? eigenvalues[eigenvalues.size() - 1] : 0.0; }
};

/// Full symmetric decomposition. Eigenvalues within 1e-9·max(1, lambda_N)
/// of zero are set to exactly 0; anything more negative raises
/// NotPositiveSemidefinite. Each eigenvector is sign-normalized so that its
/// largest-magnitude entry is positive, making the output deterministic.
/// A residual probe runs on every call and raises ConvergenceFailure when the
/// decomposition is inaccurate.
Spectrum eigendecompose(const LayerGraph& graph);

/// The symmetric matrix whose eigenpairs `eigendecompose` returns.
Matrix spectral_operator(const LayerGraph& graph);

struct SpectrumCheck {
  double orthonormality_error;   // max |UᵀU - I|
  double reconstruction_error;   // max |M - U Λ Uᵀ|
};
/// Full O(N³) invariant check, for tests and diagnostics tooling.
SpectrumCheck check_spectrum(const LayerGraph& graph, const Spectrum& spectrum);

/// X̂ = Uᵀ X (random-walk: Uᵀ D^{1/2} X). Raises DimMismatch.
Matrix gft(const Spectrum& spectrum, const Eigen::Ref<const Matrix>& signal);
/// Inverse transform. Random-walk signals are only recovered on vertices of
/// nonzero degree.
Matrix inverse_gft(const Spectrum& spectrum, const Eigen::Ref<const Matrix>& coeffs);

/// Per-mode energies ‖X̂_m‖² (row squared norms of the coefficients).
Vector mode_energies(const Eigen::Ref<const Matrix>& coeffs);

/// Replaces each energy by the mean over its numerically degenerate
/// eigenvalue cluster (|lambda_i - lambda_j| <= 1e-9·lambda_N, chained).
/// Within a degenerate eigenspace the split of energy among basis vectors is
/// arbitrary; the cluster total is not.
Vector basis_invariant_energies(const Spectrum& spectrum, const Vector& energies);

/// Dirichlet energy Tr(Xᵀ M X): M is D - W for combinatorial and random-walk
/// graphs and the normalized Laplacian for the symmetric-normalized kind.
double dirichlet_energy(const LayerGraph& graph, const Eigen::Ref<const Matrix>& signal);
/// Σ_m lambda_m ‖X̂_m‖².
double spectral_energy(const Spectrum& spectrum, const Eigen::Ref<const Matrix>& coeffs);

std::size_t default_hfer_cutoff(std::size_t n);  // floor(N/2)

/// Share of energy in modes K+1..N (1-based). Raises ZeroSignal on an
/// all-zero signal and DimMismatch for K > N.
double hfer(std::span<const double> energies, std::size_t cutoff);
double hfer(const Spectrum& spectrum, const Eigen::Ref<const Matrix>& coeffs,
            std::optional<std::size_t> cutoff = std::nullopt);
/// Share of energy in modes 1..K.
double low_frequency_ratio(std::span<const double> energies, std::size_t cutoff);

/// Shannon entropy (nats) of the per-mode energy shares; 0·ln 0 = 0.
double spectral_entropy(std::span<const double> energies);
double spectral_entropy(const Eigen::Ref<const Matrix>& coeffs);

/// lambda_2, reported as exactly 0 when it is within 1e-9·lambda_N of zero.
/// Raises TooFewTokens for N < 2.
double fiedler(const Spectrum& spectrum);

/// 1 - E / (lambda_N ‖X‖_F²). Raises DegenerateGraph when lambda_N = 0 and
/// ZeroSignal when X = 0.
double smoothness(const LayerGraph& graph, const Spectrum& spectrum,
                  const Eigen::Ref<const Matrix>& signal);
/// Same ratio from precomputed parts; `signal_norm_sq` is ‖X‖_F² (degree
/// weighted for random-walk graphs).
double smoothness_from_parts(double energy, double lambda_max, double signal_norm_sq);

/// ‖X‖_F², degree-weighted for random-walk spectra.
double signal_norm_sq(const Spectrum& spectrum, const Eigen::Ref<const Matrix>& signal);

}  // namespace attn_spectra

#include "attn_spectra/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "attn_spectra/error.hpp"

namespace attn_spectra {

namespace {

constexpr double kNegativeTolerance = 1e-9;
constexpr double kDegenerateTolerance = 1e-9;
constexpr double kProbeOrthTolerance = 1e-8;
constexpr double kProbeResidualTolerance = 1e-7;

// Deterministic probe vector with no special structure relative to graphs.
Vector probe_vector(Eigen::Index n, double phase) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = std::sin(1.0 + phase + 0.7548776662 * static_cast<double>(i) * (i + 3));
  return v;
}

void check_dims(const Spectrum& spectrum, Eigen::Index rows) {
  if (rows != static_cast<Eigen::Index>(spectrum.size())) {
    fail(ErrorKind::DimMismatch,
         fmt::format("signal has {} rows but the spectrum has {} modes", rows, spectrum.size()));
  }
}

}  // namespace

Matrix spectral_operator(const LayerGraph& graph) {
  switch (graph.kind) {
    case LaplacianKind::combinatorial:
    case LaplacianKind::symmetric_normalized:
      return graph.laplacian;
    case LaplacianKind::random_walk:
      return normalized_laplacian(graph);
  }
  return graph.laplacian;
}

Spectrum eigendecompose(const LayerGraph& graph) {
  const Matrix op = spectral_operator(graph);
  const auto n = op.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(op);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::ConvergenceFailure,
         fmt::format("eigensolver did not converge (N={}, max|L|={:.3g}, diag range [{:.3g}, {:.3g}])",
                     n, op.cwiseAbs().maxCoeff(), op.diagonal().minCoeff(), op.diagonal().maxCoeff()));
  }

  Spectrum s;
  s.kind = graph.kind;
  s.eigenvalues = solver.eigenvalues();
  s.eigenvectors = solver.eigenvectors();
  const double lambda_max = n ? s.eigenvalues[n - 1] : 0.0;
  const double negative_floor = -kNegativeTolerance * std::max(1.0, lambda_max);
  if (n && s.eigenvalues[0] < negative_floor) {
    fail(ErrorKind::NotPositiveSemidefinite,
         fmt::format("smallest eigenvalue {:.6g} is below {:.3g}", s.eigenvalues[0], negative_floor));
  }
  const double zero_band = kNegativeTolerance * std::max(1.0, lambda_max);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s.eigenvalues[i] <= zero_band) s.eigenvalues[i] = 0.0;
  }

  for (Eigen::Index k = 0; k < n; ++k) {
    auto col = s.eigenvectors.col(k);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col[arg] < 0.0) col = -col;
  }

  if (graph.kind == LaplacianKind::random_walk) s.vertex_scale = graph.degrees.cwiseSqrt();

  if (n > 0) {
    const Vector v = probe_vector(n, 0.0);
    const double orth = (s.eigenvectors * (s.eigenvectors.transpose() * v) - v).norm() / v.norm();
    const Vector c = probe_vector(n, 1.0);
    const Vector x = s.eigenvectors * c;
    const Vector lc = s.eigenvalues.cwiseProduct(c);
    const double resid = (op * x - s.eigenvectors * lc).norm() / c.norm();
    const double scale = std::max(1.0, lambda_max);
    const double tol_orth = kProbeOrthTolerance * std::sqrt(static_cast<double>(n));
    const double tol_resid = kProbeResidualTolerance * scale * std::sqrt(static_cast<double>(n));
    if (!(orth <= tol_orth) || !(resid <= tol_resid)) {
      fail(ErrorKind::ConvergenceFailure,
           fmt::format("eigendecomposition failed its probe (orthogonality {:.3g}, residual {:.3g})",
                       orth, resid));
    }
  }
  return s;
}

SpectrumCheck check_spectrum(const LayerGraph& graph, const Spectrum& spectrum) {
  const auto& u = spectrum.eigenvectors;
  const auto n = u.rows();
  const Matrix gram = u.transpose() * u - Matrix::Identity(n, n);
  const Matrix recon =
      spectral_operator(graph) - u * spectrum.eigenvalues.asDiagonal() * u.transpose();
  return {n ? gram.cwiseAbs().maxCoeff() : 0.0, n ? recon.cwiseAbs().maxCoeff() : 0.0};
}

Matrix gft(const Spectrum& spectrum, const Eigen::Ref<const Matrix>& signal) {
  check_dims(spectrum, signal.rows());
  if (spectrum.vertex_scale.size()) {
    return spectrum.eigenvectors.transpose() * (spectrum.vertex_scale.asDiagonal() * signal);
  }
  return spectrum.eigenvectors.transpose() * signal;
}

Matrix inverse_gft(const Spectrum& spectrum, const Eigen::Ref<const Matrix>& coeffs) {
  check_dims(spectrum, coeffs.rows());
  Matrix x = spectrum.eigenvectors * coeffs;
  if (spectrum.vertex_scale.size()) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double s = spectrum.vertex_scale[i];
      x.row(i) *= s > 0.0 ? 1.0 / s : 0.0;
    }
  }
  return x;
}

Vector mode_energies(const Eigen::Ref<const Matrix>& coeffs) { return coeffs.rowwise().squaredNorm(); }

Vector basis_invariant_energies(const Spectrum& spectrum, const Vector& energies) {
  if (energies.size() != static_cast<Eigen::Index>(spectrum.size())) {
    fail(ErrorKind::DimMismatch, "energy vector and spectrum differ in length");
  }
  const auto& lambda = spectrum.eigenvalues;
  const double tol = kDegenerateTolerance * spectrum.lambda_max();
  Vector out = energies;
  Eigen::Index start = 0;
  const auto n = lambda.size();
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && lambda[end] - lambda[end - 1] <= tol) ++end;
    if (end - start > 1) {
      const double mean = energies.segment(start, end - start).mean();
      out.segment(start, end - start).setConstant(mean);
    }
    start = end;
  }
  return out;
}

double dirichlet_energy(const LayerGraph& graph, const Eigen::Ref<const Matrix>& signal) {
  if (signal.rows() != static_cast<Eigen::Index>(graph.size())) {
    fail(ErrorKind::DimMismatch, fmt::format("signal has {} rows, graph has {} vertices",
                                             signal.rows(), graph.size()));
  }
  const Matrix form = graph.kind == LaplacianKind::symmetric_normalized
                          ? graph.laplacian
                          : combinatorial_laplacian(graph);
  return signal.cwiseProduct(form * signal).sum();
}

double spectral_energy(const Spectrum& spectrum, const Eigen::Ref<const Matrix>& coeffs) {
  check_dims(spectrum, coeffs.rows());
  return spectrum.eigenvalues.dot(mode_energies(coeffs));
}

std::size_t default_hfer_cutoff(std::size_t n) { return n / 2; }

double hfer(std::span<const double> energies, std::size_t cutoff) {
  if (cutoff > energies.size()) {
    fail(ErrorKind::DimMismatch,
         fmt::format("cutoff {} exceeds the {} available modes", cutoff, energies.size()));
  }
  double low = 0.0, high = 0.0;
  for (std::size_t m = 0; m < energies.size(); ++m) (m < cutoff ? low : high) += energies[m];
  const double total = low + high;
  if (!(total > 0.0)) fail(ErrorKind::ZeroSignal, "signal carries no energy");
  return high / total;
}

double hfer(const Spectrum& spectrum, const Eigen::Ref<const Matrix>& coeffs,
            std::optional<std::size_t> cutoff) {
  check_dims(spectrum, coeffs.rows());
  const Vector e = basis_invariant_energies(spectrum, mode_energies(coeffs));
  return hfer(std::span<const double>(e.data(), static_cast<std::size_t>(e.size())),
              cutoff.value_or(default_hfer_cutoff(spectrum.size())));
}

double low_frequency_ratio(std::span<const double> energies, std::size_t cutoff) {
  // The complement of hfer, so the two sum to exactly 1.
  return 1.0 - hfer(energies, cutoff);
}

double spectral_entropy(std::span<const double> energies) {
  double total = 0.0;
  for (double e : energies) total += e;
  if (!(total > 0.0)) fail(ErrorKind::ZeroSignal, "signal carries no energy");
  double h = 0.0;
  for (double e : energies) {
    if (e > 0.0) {
      const double p = e / total;
      h -= p * std::log(p);
    }
  }
  return std::max(0.0, h);
}

double spectral_entropy(const Eigen::Ref<const Matrix>& coeffs) {
  const Vector e = mode_energies(coeffs);
  return spectral_entropy(std::span<const double>(e.data(), static_cast<std::size_t>(e.size())));
}

double fiedler(const Spectrum& spectrum) {
  if (spectrum.size() < 2) {
    fail(ErrorKind::TooFewTokens, fmt::format("need N >= 2, got {}", spectrum.size()));
  }
  const double lambda2 = spectrum.eigenvalues[1];
  return lambda2 <= kDegenerateTolerance * spectrum.lambda_max() ? 0.0 : lambda2;
}

double smoothness_from_parts(double energy, double lambda_max, double norm_sq) {
  if (!(lambda_max > 0.0)) fail(ErrorKind::DegenerateGraph, "largest eigenvalue is zero");
  if (!(norm_sq > 0.0)) fail(ErrorKind::ZeroSignal, "signal has zero norm");
  return 1.0 - energy / (lambda_max * norm_sq);
}

double signal_norm_sq(const Spectrum& spectrum, const Eigen::Ref<const Matrix>& signal) {
  check_dims(spectrum, signal.rows());
  if (spectrum.vertex_scale.size()) {
    return (spectrum.vertex_scale.asDiagonal() * signal).squaredNorm();
  }
  return signal.squaredNorm();
}

double smoothness(const LayerGraph& graph, const Spectrum& spectrum,
                  const Eigen::Ref<const Matrix>& signal) {
  const double norm_sq = signal_norm_sq(spectrum, signal);
  return smoothness_from_parts(dirichlet_energy(graph, signal), spectrum.lambda_max(), norm_sq);
}

}  // namespace attn_spectra

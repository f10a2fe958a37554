#pragma once
// Shared fixtures for the unit tests and the acceptance driver.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "attn_spectra/archive.hpp"
#include "attn_spectra/error.hpp"
#include "attn_spectra/graph.hpp"
#include "attn_spectra/random.hpp"

namespace testing {

using attn_spectra::Matrix;
using attn_spectra::Vector;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Symmetric nonnegative weights with zero diagonal; each edge present with
/// probability `density` and weight uniform in (0, 1], or 1 when `unit`.
Matrix random_weights(std::size_t n, double density, attn_spectra::Rng& rng, bool unit = false);

Matrix random_signal(std::size_t n, std::size_t d, attn_spectra::Rng& rng);

/// Row-stochastic N×N matrix with strictly positive entries.
Matrix random_stochastic(std::size_t n, attn_spectra::Rng& rng);

/// Plain-loop Laplacian, independent of the library.
Matrix laplacian_by_loops(const Matrix& w);

/// Σ_{i<j} W_ij ‖X_i − X_j‖².
double pairwise_energy(const Matrix& w, const Matrix& x);

/// min over vertex subsets S with 0 < |S| ≤ N/2 of cut(S) / |S|.
double cheeger_brute_force(const Matrix& w);

/// Number of connected components of the graph with an edge where W_ij > 0.
std::size_t components(const Matrix& w);

double relative_gap(double a, double b);

std::filesystem::path source_data_dir();

/// Runs `fn` and reports whether it threw attn_spectra::Error of `kind`.
template <class Fn>
bool throws_kind(Fn&& fn, attn_spectra::ErrorKind kind) {
  try {
    fn();
  } catch (const attn_spectra::Error& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace testing

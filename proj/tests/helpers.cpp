#include "helpers.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <limits>
#include <numeric>

#include <unistd.h>

namespace fs = std::filesystem;

namespace testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("attn_spectra_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Matrix random_weights(std::size_t n, double density, attn_spectra::Rng& rng, bool unit) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix w = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (attn_spectra::uniform01(rng) < density) {
        const double v = unit ? 1.0 : 1.0 - attn_spectra::uniform01(rng);
        w(i, j) = v;
        w(j, i) = v;
      }
    }
  }
  return w;
}

Matrix random_signal(std::size_t n, std::size_t d, attn_spectra::Rng& rng) {
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = attn_spectra::standard_normal(rng);
  }
  return x;
}

Matrix random_stochastic(std::size_t n, attn_spectra::Rng& rng) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix a(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      a(i, j) = 0.05 + attn_spectra::uniform01(rng);
      sum += a(i, j);
    }
    a.row(i) /= sum;
  }
  return a;
}

Matrix laplacian_by_loops(const Matrix& w) {
  const auto n = w.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double degree = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      degree += w(i, j);
      if (i != j) l(i, j) = -w(i, j);
    }
    // Self-loops add to the degree and to -W on the diagonal; they cancel.
    l(i, i) = degree - w(i, i);
  }
  return l;
}

double pairwise_energy(const Matrix& w, const Matrix& x) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < w.cols(); ++j) {
      double dist = 0.0;
      for (Eigen::Index k = 0; k < x.cols(); ++k) {
        const double diff = x(i, k) - x(j, k);
        dist += diff * diff;
      }
      e += w(i, j) * dist;
    }
  }
  return e;
}

double cheeger_brute_force(const Matrix& w) {
  const auto n = static_cast<std::size_t>(w.rows());
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    if (2 * size > n) continue;
    double cut = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1u)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask >> j & 1u) continue;
        cut += w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    best = std::min(best, cut / static_cast<double>(size));
  }
  return best;
}

std::size_t components(const Matrix& w) {
  const auto n = static_cast<std::size_t>(w.rows());
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) {
        parent[find(i)] = find(j);
      }
    }
  }
  std::size_t count = 0;
  for (std::size_t v = 0; v < n; ++v) count += find(v) == v;
  return count;
}

double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

fs::path source_data_dir() { return ATTN_SPECTRA_TEST_DATA; }

}  // namespace testing

#pragma once
// Reference computations written the slow, obvious way. They share no code
// with the library.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "attn_spectra/synthlab.hpp"

namespace oracles {

/// Combinatorial Laplacian spectra written out by hand, kept apart from
/// synthlab's own table. Only the graph-kind enum is shared.
inline std::vector<double> expected_spectrum(attn_spectra::GraphKind kind, std::size_t n, double w) {
  using attn_spectra::GraphKind;
  const double pi = std::numbers::pi;
  const auto nn = static_cast<double>(n);
  std::vector<double> out;
  switch (kind) {
    case GraphKind::path:
      for (std::size_t k = 0; k < n; ++k) out.push_back(2.0 * w * (1.0 - std::cos(pi * static_cast<double>(k) / nn)));
      break;
    case GraphKind::cycle:
      for (std::size_t k = 0; k < n; ++k) {
        out.push_back(2.0 * w * (1.0 - std::cos(2.0 * pi * static_cast<double>(k) / nn)));
      }
      break;
    case GraphKind::complete:
    case GraphKind::uniform:
      out.assign(n, w * nn);
      out[0] = 0.0;
      break;
    case GraphKind::two_block: {
      const std::size_t a = n / 2, b = n - a;
      out = {0.0, 0.0};
      for (std::size_t i = 1; i < a; ++i) out.push_back(w * static_cast<double>(a));
      for (std::size_t i = 1; i < b; ++i) out.push_back(w * static_cast<double>(b));
      break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Counts of the U statistic of group a over all C(na+nb, na) rank subsets.
inline std::vector<double> mann_whitney_enumerated(std::size_t na, std::size_t nb) {
  const std::size_t n = na + nb;
  std::vector<double> counts(na * nb + 1, 0.0);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != na) continue;
    // U = number of (a, b) pairs with a above b.
    std::size_t u = 0, bs_below = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1u) {
        u += bs_below;
      } else {
        ++bs_below;
      }
    }
    counts[u] += 1.0;
  }
  return counts;
}

/// Two-sided p: twice the smaller tail, capped at 1.
inline double mann_whitney_exact_p(const std::vector<double>& counts, double u) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double lower = 0.0, upper = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (static_cast<double>(k) <= u) lower += counts[k];
    if (static_cast<double>(k) >= u) upper += counts[k];
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

inline double student_t_density(double x, double nu) {
  const double log_c = std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
                       0.5 * std::log(nu * 3.14159265358979323846);
  return std::exp(log_c - (nu + 1.0) / 2.0 * std::log1p(x * x / nu));
}

/// P(|T| > |t|) by composite Simpson over [0, |t|].
inline double student_t_two_sided_by_quadrature(double t, double nu) {
  const double b = std::abs(t);
  const int m = 200000;  // even
  const double h = b / m;
  double sum = student_t_density(0.0, nu) + student_t_density(b, nu);
  for (int i = 1; i < m; ++i) sum += (i % 2 ? 4.0 : 2.0) * student_t_density(i * h, nu);
  const double central = sum * h / 3.0;
  return std::clamp(1.0 - 2.0 * central, 0.0, 1.0);
}

struct Bh {
  std::vector<bool> rejected;
  std::vector<double> adjusted;
};

inline Bh bh_by_hand(const std::vector<double>& p, double q) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::size_t k = 0;
  for (std::size_t i = 1; i <= m; ++i) {
    if (p[order[i - 1]] <= static_cast<double>(i) * q / static_cast<double>(m)) k = i;
  }
  Bh out{std::vector<bool>(m, false), std::vector<double>(m, 1.0)};
  for (std::size_t i = 0; i < k; ++i) out.rejected[order[i]] = true;
  double running = 1.0;
  for (std::size_t i = m; i >= 1; --i) {
    running = std::min(running, p[order[i - 1]] * static_cast<double>(m) / static_cast<double>(i));
    out.adjusted[order[i - 1]] = running;
  }
  return out;
}

/// Standard normal CDF.
inline double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace oracles

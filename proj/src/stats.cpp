#include "attn_spectra/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "attn_spectra/error.hpp"

namespace attn_spectra {

namespace {

// Average ranks (1-based) of the pooled sample, plus the tie-correction sum
// Σ (t³ - t) over tie groups.
struct Ranking {
  std::vector<double> ranks;
  double tie_term = 0.0;
};

Ranking rank_pooled(std::span<const double> pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
  Ranking out;
  out.ranks.assign(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && pooled[order[j]] == pooled[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) out.ranks[order[k]] = avg;
    const double t = static_cast<double>(j - i);
    out.tie_term += t * t * t - t;
    i = j;
  }
  return out;
}

// Number of rank subsets of size m drawn from m+n ranks, indexed by U.
// freq(m, n, u) = freq(m-1, n, u-n) + freq(m, n-1, u).
std::vector<double> mann_whitney_null_counts(std::size_t m, std::size_t n) {
  // table[j][u] holds counts for (i, j) while sweeping i upward.
  std::vector<std::vector<double>> prev(n + 1), cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = {1.0};  // i = 0: only U = 0
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = {1.0};
    for (std::size_t j = 1; j <= n; ++j) {
      std::vector<double> row(i * j + 1, 0.0);
      const auto& take = prev[j];     // (i-1, j), shifted by j
      const auto& skip = cur[j - 1];  // (i, j-1)
      for (std::size_t u = 0; u < take.size(); ++u) row[u + j] += take[u];
      for (std::size_t u = 0; u < skip.size(); ++u) row[u] += skip[u];
      cur[j] = std::move(row);
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

}  // namespace

GroupSummary summarize(std::span<const double> values) {
  GroupSummary s;
  s.n = values.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / static_cast<double>(s.n - 1);
  }
  return s;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    fail(ErrorKind::TooFewSamples,
         fmt::format("Cohen's d needs two samples per group (got {} and {})", a.size(), b.size()));
  }
  const auto sa = summarize(a), sb = summarize(b);
  const double pooled_var =
      (static_cast<double>(sa.n - 1) * sa.variance + static_cast<double>(sb.n - 1) * sb.variance) /
      static_cast<double>(sa.n + sb.n - 2);
  if (!(pooled_var > 0.0)) fail(ErrorKind::ZeroVariance, "pooled standard deviation is zero");
  return (sa.mean - sb.mean) / std::sqrt(pooled_var);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 const MannWhitneyOptions& options) {
  if (a.empty() || b.empty()) {
    fail(ErrorKind::EmptyGroup,
         fmt::format("Mann-Whitney needs both groups non-empty (got {} and {})", a.size(), b.size()));
  }
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranking = rank_pooled(pooled);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum += ranking.ranks[i];

  MannWhitneyResult r;
  r.u = rank_sum - na * (na + 1.0) / 2.0;

  if (pooled.size() <= options.exact_limit && ranking.tie_term == 0.0) {
    const auto counts = mann_whitney_null_counts(a.size(), b.size());
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto u = static_cast<std::size_t>(std::llround(r.u));
    double lower = 0.0, upper = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (k <= u) lower += counts[k];
      if (k >= u) upper += counts[k];
    }
    r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    r.exact = true;
    return r;
  }

  const double n = na + nb;
  const double mean = na * nb / 2.0;
  const double var = na * nb / 12.0 * ((n + 1.0) - ranking.tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  double dev = std::abs(r.u - mean);
  if (options.continuity_correction) dev = std::max(0.0, dev - 0.5);
  r.p_value = std::min(1.0, 2.0 * normal_sf(dev / std::sqrt(var)));
  return r;
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    fail(ErrorKind::TooFewSamples,
         fmt::format("Welch's t needs two samples per group (got {} and {})", a.size(), b.size()));
  }
  const auto sa = summarize(a), sb = summarize(b);
  const double va = sa.variance / static_cast<double>(sa.n);
  const double vb = sb.variance / static_cast<double>(sb.n);
  const double se2 = va + vb;
  const double diff = sa.mean - sb.mean;
  WelchResult r;
  if (!(se2 > 0.0)) {
    r.dof = static_cast<double>(sa.n + sb.n - 2);
    if (diff == 0.0) {
      r.t = 0.0;
      r.p_value = 1.0;
    } else {
      r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
      r.p_value = 0.0;
    }
    return r;
  }
  r.t = diff / std::sqrt(se2);
  r.dof = se2 * se2 /
          (va * va / static_cast<double>(sa.n - 1) + vb * vb / static_cast<double>(sb.n - 1));
  const boost::math::students_t_distribution<double> dist(r.dof);
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

BhResult benjamini_hochberg(std::span<const double> p_values, double q) {
  const std::size_t m = p_values.size();
  BhResult out;
  out.rejected.assign(m, false);
  out.adjusted.assign(m, 1.0);
  if (m == 0) return out;
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::BadSpec, fmt::format("p-value {} outside [0,1]", p));
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return p_values[x] < p_values[y]; });

  std::size_t k = 0;  // number rejected
  for (std::size_t i = 0; i < m; ++i) {
    const double rank = static_cast<double>(i + 1);
    if (p_values[order[i]] <= rank * q / static_cast<double>(m)) k = i + 1;
  }
  for (std::size_t i = 0; i < k; ++i) out.rejected[order[i]] = true;

  double running = 1.0;
  for (std::size_t i = m; i-- > 0;) {
    const double scaled = p_values[order[i]] * static_cast<double>(m) / static_cast<double>(i + 1);
    running = std::min(running, scaled);
    out.adjusted[order[i]] = std::min(1.0, running);
  }
  return out;
}

std::vector<ScanRow> scan(const FeatureTable& table, const ScanOptions& options) {
  if (table.count(Label::valid) == 0 || table.count(Label::invalid) == 0) {
    fail(ErrorKind::SingleClassCorpus,
         fmt::format("scan needs both classes (valid={}, invalid={})", table.count(Label::valid),
                     table.count(Label::invalid)));
  }
  std::vector<ScanRow> rows;
  rows.reserve(table.feature_count());
  std::vector<double> valid, invalid;
  for (std::size_t f = 0; f < table.feature_count(); ++f) {
    valid.clear();
    invalid.clear();
    const auto col = table.column(f);
    for (std::size_t i = 0; i < table.size(); ++i) {
      (table.labels()[i] == Label::valid ? valid : invalid).push_back(col[i]);
    }
    ScanRow row;
    row.metric = table.features()[f].metric;
    row.layer = table.features()[f].layer;
    try {
      row.cohens_d = cohens_d(valid, invalid);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroVariance) throw;
      row.cohens_d = 0.0;
    }
    row.p_mw = mann_whitney_u(valid, invalid, options.mann_whitney).p_value;
    row.p_t = welch_t(valid, invalid).p_value;
    row.valid_mean = summarize(valid).mean;
    row.invalid_mean = summarize(invalid).mean;
    rows.push_back(std::move(row));
  }

  std::vector<double> p(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) p[i] = rows[i].p_mw;
  const auto bh = benjamini_hochberg(p, options.fdr);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].p_bh = bh.adjusted[i];
    rows[i].rejected = bh.rejected[i];
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ScanRow& x, const ScanRow& y) {
    if (x.p_mw != y.p_mw) return x.p_mw < y.p_mw;
    return std::abs(x.cohens_d) > std::abs(y.cohens_d);
  });
  return rows;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::DimMismatch, "correlated columns differ in length");
  if (x.size() < 3) {
    fail(ErrorKind::TooFewSamples, fmt::format("correlation needs 3 samples, got {}", x.size()));
  }
  const auto sx = summarize(x), sy = summarize(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - sx.mean, dy = y[i] - sy.mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix metric_correlations(const FeatureTable& table, int layer,
                                      std::span<const std::string> metrics) {
  CorrelationMatrix out;
  out.metrics.assign(metrics.begin(), metrics.end());
  std::vector<std::size_t> cols;
  for (const auto& m : metrics) cols.push_back(table.require_feature({m, layer}));
  const std::size_t k = cols.size();
  out.r.assign(k, std::vector<std::optional<double>>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      auto r = (i == j) ? pearson(table.column(cols[i]), table.column(cols[i]))
                        : pearson(table.column(cols[i]), table.column(cols[j]));
      if (i == j && r) r = 1.0;
      out.r[i][j] = r;
      out.r[j][i] = r;
    }
  }
  return out;
}

CorrelationMatrix metric_correlations(const FeatureTable& table, int layer) {
  std::vector<std::string> metrics;
  for (auto m : metric::spectral) metrics.emplace_back(m);
  return metric_correlations(table, layer, metrics);
}

}  // namespace attn_spectra

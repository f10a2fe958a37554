#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attn_spectra/feature_table.hpp"

namespace attn_spectra {

struct GroupSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased; 0 when n == 1

  bool operator==(const GroupSummary&) const = default;
};

GroupSummary summarize(std::span<const double> values);

/// (mean(a) - mean(b)) / s_pooled. Raises TooFewSamples below two samples per
/// group and ZeroVariance when the pooled deviation vanishes.
double cohens_d(std::span<const double> a, std::span<const double> b);

struct MannWhitneyResult {
  double u = 0.0;        // U statistic of group a
  double p_value = 1.0;  // two-sided
  bool exact = false;
};

struct MannWhitneyOptions {
  // Exact null distribution when n_a + n_b is at most this and there are no ties.
  std::size_t exact_limit = 12;
  bool continuity_correction = true;
};

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 const MannWhitneyOptions& options = {});

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;  // two-sided
};

WelchResult welch_t(std::span<const double> a, std::span<const double> b);

struct BhResult {
  std::vector<bool> rejected;
  std::vector<double> adjusted;  // in input order
};

/// Benjamini-Hochberg step-up at level q.
BhResult benjamini_hochberg(std::span<const double> p_values, double q);

/// Standard normal upper tail P(Z > z).
double normal_sf(double z);

struct ScanRow {
  std::string metric;
  int layer = 0;
  double cohens_d = 0.0;  // valid - invalid
  double p_mw = 1.0;
  double p_t = 1.0;
  double p_bh = 1.0;
  double valid_mean = 0.0;
  double invalid_mean = 0.0;
  bool rejected = false;

  bool operator==(const ScanRow&) const = default;
};

struct ScanOptions {
  double fdr = 0.05;
  MannWhitneyOptions mann_whitney;
};

/// One row per feature of `table`, BH-corrected over all rows on the
/// Mann-Whitney p-values, ranked by p_mw ascending then |d| descending.
/// Features whose pooled deviation is zero report d = 0.
std::vector<ScanRow> scan(const FeatureTable& table, const ScanOptions& options = {});

/// Pearson correlations between `metrics` at one layer. Entries involving a
/// constant column are empty.
struct CorrelationMatrix {
  std::vector<std::string> metrics;
  std::vector<std::vector<std::optional<double>>> r;
};

CorrelationMatrix metric_correlations(const FeatureTable& table, int layer,
                                      std::span<const std::string> metrics);
CorrelationMatrix metric_correlations(const FeatureTable& table, int layer);

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

}  // namespace attn_spectra

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attn_spectra/feature_table.hpp"
#include "attn_spectra/pipeline.hpp"

namespace attn_spectra {

// "below": valid iff score <= threshold. "above": valid iff score > threshold.
enum class Direction : std::uint8_t { below, above };
std::string_view to_string(Direction direction);
Direction parse_direction(std::string_view text);

enum class Objective : std::uint8_t { accuracy, balanced_accuracy };
std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view text);

struct ThresholdRule {
  FeatureKey feature;
  Direction direction = Direction::below;
  double threshold = 0.0;

  bool passes(double score) const {
    return direction == Direction::below ? score <= threshold : score > threshold;
  }
  bool operator==(const ThresholdRule&) const = default;
};

/// Conjunction: valid iff both clauses pass.
struct TwoFeatureRule {
  std::array<ThresholdRule, 2> clauses;

  bool operator==(const TwoFeatureRule&) const = default;
};

// Positive class is `valid`.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fn + fp + tn; }
  std::size_t correct() const { return tp + tn; }
  double accuracy() const;
  double balanced_accuracy() const;
  Confusion& operator+=(const Confusion& other);
  bool operator==(const Confusion&) const = default;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool operator==(const Interval&) const = default;
};

/// Wilson score interval; z defaults to the 95% two-sided quantile.
Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct Calibration {
  ThresholdRule rule;
  Confusion confusion;
  double objective = 0.0;
  double margin = 0.0;  // distance from the threshold to the nearest score

  bool operator==(const Calibration&) const = default;
};

/// Searches midpoints of adjacent sorted unique scores plus the maximum
/// score, in both directions unless one is given. Ties go to the larger
/// margin, then the lower threshold, then `below`. Raises SingleClass when a
/// class is missing and BadSpec for unlabeled entries.
Calibration calibrate_threshold(std::span<const double> scores, std::span<const Label> labels,
                                std::optional<Direction> direction = std::nullopt,
                                Objective objective = Objective::accuracy);

Calibration calibrate_feature(const FeatureTable& table, const FeatureKey& feature,
                              std::optional<Direction> direction = std::nullopt,
                              Objective objective = Objective::accuracy);

/// Best single feature of the table. Ties between features go to the earlier
/// feature in table order.
Calibration calibrate_best(const FeatureTable& table, Objective objective = Objective::accuracy);

Label predict(const ThresholdRule& rule, const DiagnosticsRecord& record);
Label predict(const TwoFeatureRule& rule, const DiagnosticsRecord& record);
Label predict(const ThresholdRule& rule, const FeatureTable& table, std::size_t row);
Label predict(const TwoFeatureRule& rule, const FeatureTable& table, std::size_t row);

Confusion evaluate(const ThresholdRule& rule, const FeatureTable& table);
Confusion evaluate(const TwoFeatureRule& rule, const FeatureTable& table);

struct TwoFeatureResult {
  TwoFeatureRule rule;
  Confusion confusion;
  double objective = 0.0;
  std::vector<FeatureKey> pool;

  bool operator==(const TwoFeatureResult&) const = default;
};

/// Exhaustive conjunction search over the `pool_size` features with the
/// largest |d|. A clause at the maximum score with direction `below` passes
/// everything, so the best single feature in the pool is always reachable.
TwoFeatureResult search_two_feature(const FeatureTable& table, std::size_t pool_size = 10,
                                    Objective objective = Objective::accuracy);

struct FoldTrace {
  std::size_t fold = 0;
  ThresholdRule rule;
  double inner_score = 0.0;  // mean inner-fold objective of the selected feature
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  Confusion confusion;

  bool operator==(const FoldTrace&) const = default;
};

struct CurvePoint {
  double multiplier = 1.0;
  double threshold = 0.0;
  double accuracy = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

struct LearningPoint {
  std::size_t size = 0;
  double mean_accuracy = 0.0;
  double sd_accuracy = 0.0;
  std::size_t repeats = 0;

  bool operator==(const LearningPoint&) const = default;
};

struct ConfigCount {
  FeatureKey feature;
  std::size_t count = 0;

  bool operator==(const ConfigCount&) const = default;
};

struct EvalReport {
  std::string protocol;  // calibrated | split | nested | robustness | transfer | two-feature
  std::uint64_t seed = 0;
  Objective objective = Objective::accuracy;
  double accuracy = 0.0;
  double accuracy_sd = 0.0;  // across outer folds (nested only)
  Confusion confusion;
  Interval accuracy_ci;
  std::vector<ThresholdRule> rules;
  std::optional<TwoFeatureRule> two_feature;
  std::vector<FoldTrace> folds;
  std::vector<ConfigCount> selected_configs;
  std::vector<CurvePoint> robustness;
  std::vector<LearningPoint> learning_curve;
  std::optional<double> recalibrated_accuracy;
  std::optional<double> validation_accuracy;

  bool operator==(const EvalReport&) const = default;
};

/// Calibrates the best single feature on the whole table and reports its
/// in-sample accuracy.
EvalReport eval_calibrated(const FeatureTable& table, Objective objective = Objective::accuracy);

struct SplitOptions {
  double train = 0.6;
  double val = 0.2;
  std::uint64_t seed = 0;
  Objective objective = Objective::accuracy;
};

/// Stratified split. Feature and direction are chosen on train, the
/// threshold is recalibrated on validation, and test accuracy is computed
/// once. Raises TooSmall below 10 samples or 3 per class.
EvalReport eval_split(const FeatureTable& table, const SplitOptions& options = {});

struct NestedOptions {
  std::size_t outer = 5;
  std::size_t inner = 4;
  std::uint64_t seed = 0;
  Objective objective = Objective::accuracy;
};

/// Nested stratified cross-validation. Raises TooSmall unless each class has
/// at least outer × inner samples.
EvalReport eval_nested_cv(const FeatureTable& table, const NestedOptions& options = {});

/// One outer fold: selects the feature by inner cross-validation on `train`,
/// recalibrates on all of `train`, scores `test`. Raises LeakageDetected if
/// any sample id occurs on both sides.
FoldTrace evaluate_outer_fold(const FeatureTable& table, std::span<const std::size_t> train,
                              std::span<const std::size_t> test, const NestedOptions& options,
                              std::size_t fold_index);

/// Stratified assignment of rows to `k` folds; fold[i] is the fold of row i.
std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t k,
                                          std::uint64_t seed);

/// Multipliers 0.80, 0.85, ..., 1.20.
std::vector<double> default_multipliers();

std::vector<CurvePoint> threshold_robustness(const ThresholdRule& rule, const FeatureTable& table,
                                             std::span<const double> multipliers);

/// Applies `rule` unchanged to `target` and, side by side, a rule for the
/// same feature recalibrated on `target`.
EvalReport transfer_rule(const ThresholdRule& rule, const FeatureTable& target,
                         Objective objective = Objective::accuracy);

struct LearningCurveOptions {
  std::vector<std::size_t> sizes = {10, 20, 50, 100};
  std::size_t repeats = 20;
  double holdout = 0.2;
  std::uint64_t seed = 0;
  Objective objective = Objective::accuracy;
};

/// Accuracy on a fixed stratified holdout of the best single-feature rule
/// calibrated on random subsets of each size drawn from the remainder.
std::vector<LearningPoint> calibration_curve(const FeatureTable& table,
                                             const LearningCurveOptions& options = {});

}  // namespace attn_spectra

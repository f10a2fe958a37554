#include "attn_spectra/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "attn_spectra/error.hpp"
#include "attn_spectra/random.hpp"
#include "attn_spectra/stats.hpp"

namespace attn_spectra {

std::string_view to_string(Direction direction) {
  return direction == Direction::below ? "below" : "above";
}

Direction parse_direction(std::string_view text) {
  if (text == "below") return Direction::below;
  if (text == "above") return Direction::above;
  fail(ErrorKind::BadSpec, fmt::format("unknown direction '{}'", text));
}

std::string_view to_string(Objective objective) {
  return objective == Objective::accuracy ? "accuracy" : "balanced_accuracy";
}

Objective parse_objective(std::string_view text) {
  if (text == "accuracy") return Objective::accuracy;
  if (text == "balanced_accuracy" || text == "balanced") return Objective::balanced_accuracy;
  fail(ErrorKind::BadSpec, fmt::format("unknown objective '{}'", text));
}

double Confusion::accuracy() const {
  return total() ? static_cast<double>(correct()) / static_cast<double>(total()) : 0.0;
}

double Confusion::balanced_accuracy() const {
  const std::size_t pos = tp + fn, neg = tn + fp;
  double sum = 0.0;
  int parts = 0;
  if (pos) {
    sum += static_cast<double>(tp) / static_cast<double>(pos);
    ++parts;
  }
  if (neg) {
    sum += static_cast<double>(tn) / static_cast<double>(neg);
    ++parts;
  }
  return parts ? sum / parts : 0.0;
}

Confusion& Confusion::operator+=(const Confusion& other) {
  tp += other.tp;
  fn += other.fn;
  fp += other.fp;
  tn += other.tn;
  return *this;
}

Interval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

double objective_value(const Confusion& c, Objective objective) {
  return objective == Objective::accuracy ? c.accuracy() : c.balanced_accuracy();
}

// Integer-valued objective for exact tie detection. For balanced accuracy
// this is TP·N + TN·P, proportional to the objective at fixed class sizes.
std::uint64_t objective_key(const Confusion& c, Objective objective) {
  if (objective == Objective::accuracy) return c.correct();
  const std::uint64_t pos = c.tp + c.fn, neg = c.tn + c.fp;
  return c.tp * neg + c.tn * pos;
}

struct ClassCounts {
  std::size_t valid = 0;
  std::size_t invalid = 0;
};

ClassCounts count_classes(std::span<const Label> labels) {
  ClassCounts c;
  for (Label l : labels) {
    if (l == Label::valid) {
      ++c.valid;
    } else if (l == Label::invalid) {
      ++c.invalid;
    } else {
      fail(ErrorKind::BadSpec, "calibration labels must be valid or invalid");
    }
  }
  if (c.valid == 0 || c.invalid == 0) {
    fail(ErrorKind::SingleClass,
         fmt::format("calibration needs both classes (valid={}, invalid={})", c.valid, c.invalid));
  }
  return c;
}

// Candidate cut k splits the sorted unique values into {<= u_k} and the
// rest. The threshold is the midpoint to the next unique value, or u_k itself
// for the last cut.
struct Cut {
  double threshold = 0.0;
  double margin = 0.0;
  std::size_t valid_le = 0;
  std::size_t invalid_le = 0;
};

std::vector<Cut> cuts_of(std::span<const double> scores, std::span<const Label> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<Cut> cuts;
  std::size_t v = 0, inv = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t r = order[i];
    if (!std::isfinite(scores[r])) fail(ErrorKind::BadSpec, "calibration scores must be finite");
    (labels[r] == Label::valid ? v : inv)++;
    const bool last_of_value = i + 1 == order.size() || scores[order[i + 1]] != scores[r];
    if (!last_of_value) continue;
    Cut cut;
    cut.valid_le = v;
    cut.invalid_le = inv;
    const double lo = scores[r];
    if (i + 1 == order.size()) {
      cut.threshold = lo;
      cut.margin = 0.0;
    } else {
      const double hi = scores[order[i + 1]];
      double mid = lo + (hi - lo) / 2.0;
      if (!(mid < hi)) mid = lo;  // adjacent doubles
      cut.threshold = mid;
      cut.margin = std::min(mid - lo, hi - mid);
    }
    cuts.push_back(cut);
  }
  return cuts;
}

Confusion confusion_at(const Cut& cut, Direction direction, ClassCounts totals) {
  Confusion c;
  if (direction == Direction::below) {
    c.tp = cut.valid_le;
    c.fp = cut.invalid_le;
    c.tn = totals.invalid - cut.invalid_le;
    c.fn = totals.valid - cut.valid_le;
  } else {
    c.tp = totals.valid - cut.valid_le;
    c.fp = totals.invalid - cut.invalid_le;
    c.tn = cut.invalid_le;
    c.fn = cut.valid_le;
  }
  return c;
}

bool better_single(std::uint64_t key, double margin, double threshold, Direction dir,
                   std::uint64_t best_key, double best_margin, double best_threshold,
                   Direction best_dir) {
  if (key != best_key) return key > best_key;
  if (margin != best_margin) return margin > best_margin;
  if (threshold != best_threshold) return threshold < best_threshold;
  return dir == Direction::below && best_dir == Direction::above;
}

void check_disjoint(const FeatureTable& table, std::span<const std::size_t> train,
                    std::span<const std::size_t> test) {
  std::set<std::string_view> seen;
  for (std::size_t r : train) {
    if (r >= table.size()) fail(ErrorKind::DimMismatch, fmt::format("row {} out of range", r));
    seen.insert(table.ids()[r]);
  }
  for (std::size_t r : test) {
    if (r >= table.size()) fail(ErrorKind::DimMismatch, fmt::format("row {} out of range", r));
    if (seen.count(table.ids()[r])) {
      fail(ErrorKind::LeakageDetected,
           fmt::format("sample '{}' is in both the fitting and the scoring fold", table.ids()[r]));
    }
  }
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Per-class row indices in a seeded random order, valid first.
std::array<std::vector<std::size_t>, 2> shuffled_by_class(const FeatureTable& table, Rng& rng) {
  std::array<std::vector<std::size_t>, 2> out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    out[table.labels()[i] == Label::valid ? 0 : 1].push_back(i);
  }
  shuffle(out[0], rng);
  shuffle(out[1], rng);
  return out;
}

}  // namespace

Calibration calibrate_threshold(std::span<const double> scores, std::span<const Label> labels,
                                std::optional<Direction> direction, Objective objective) {
  if (scores.size() != labels.size()) {
    fail(ErrorKind::DimMismatch,
         fmt::format("{} scores but {} labels", scores.size(), labels.size()));
  }
  const ClassCounts totals = count_classes(labels);
  const auto cuts = cuts_of(scores, labels);

  Calibration best;
  std::uint64_t best_key = 0;
  bool have = false;
  for (const Cut& cut : cuts) {
    for (Direction dir : {Direction::below, Direction::above}) {
      if (direction && *direction != dir) continue;
      const Confusion c = confusion_at(cut, dir, totals);
      const std::uint64_t key = objective_key(c, objective);
      if (!have || better_single(key, cut.margin, cut.threshold, dir, best_key, best.margin,
                                 best.rule.threshold, best.rule.direction)) {
        have = true;
        best_key = key;
        best.rule.direction = dir;
        best.rule.threshold = cut.threshold;
        best.margin = cut.margin;
        best.confusion = c;
      }
    }
  }
  best.objective = objective_value(best.confusion, objective);
  return best;
}

Calibration calibrate_feature(const FeatureTable& table, const FeatureKey& feature,
                              std::optional<Direction> direction, Objective objective) {
  const std::size_t col = table.require_feature(feature);
  Calibration c = calibrate_threshold(table.column(col), table.labels(), direction, objective);
  c.rule.feature = feature;
  return c;
}

Calibration calibrate_best(const FeatureTable& table, Objective objective) {
  if (table.feature_count() == 0) fail(ErrorKind::MissingFeature, "table has no features");
  Calibration best;
  std::uint64_t best_key = 0;
  for (std::size_t f = 0; f < table.feature_count(); ++f) {
    Calibration c = calibrate_feature(table, table.features()[f], std::nullopt, objective);
    const std::uint64_t key = objective_key(c.confusion, objective);
    if (f == 0 || key > best_key) {
      best = std::move(c);
      best_key = key;
    }
  }
  return best;
}

Label predict(const ThresholdRule& rule, const DiagnosticsRecord& record) {
  return rule.passes(record.value(rule.feature.metric, rule.feature.layer)) ? Label::valid
                                                                           : Label::invalid;
}

Label predict(const TwoFeatureRule& rule, const DiagnosticsRecord& record) {
  for (const auto& clause : rule.clauses) {
    if (predict(clause, record) == Label::invalid) return Label::invalid;
  }
  return Label::valid;
}

Label predict(const ThresholdRule& rule, const FeatureTable& table, std::size_t row) {
  const std::size_t col = table.require_feature(rule.feature);
  return rule.passes(table.column(col)[row]) ? Label::valid : Label::invalid;
}

Label predict(const TwoFeatureRule& rule, const FeatureTable& table, std::size_t row) {
  for (const auto& clause : rule.clauses) {
    if (predict(clause, table, row) == Label::invalid) return Label::invalid;
  }
  return Label::valid;
}

namespace {

template <class Rule>
Confusion evaluate_rule(const Rule& rule, const FeatureTable& table) {
  Confusion c;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const bool truth = table.labels()[i] == Label::valid;
    const bool said = predict(rule, table, i) == Label::valid;
    if (truth && said) ++c.tp;
    if (truth && !said) ++c.fn;
    if (!truth && said) ++c.fp;
    if (!truth && !said) ++c.tn;
  }
  return c;
}

}  // namespace

Confusion evaluate(const ThresholdRule& rule, const FeatureTable& table) {
  return evaluate_rule(rule, table);
}

Confusion evaluate(const TwoFeatureRule& rule, const FeatureTable& table) {
  return evaluate_rule(rule, table);
}

TwoFeatureResult search_two_feature(const FeatureTable& table, std::size_t pool_size,
                                    Objective objective) {
  const ClassCounts totals = count_classes(table.labels());
  if (table.feature_count() < 2 || pool_size < 2) {
    fail(ErrorKind::TooSmall, "two-feature search needs at least two candidate features");
  }

  // Rank features by |d|.
  std::vector<std::pair<double, std::size_t>> ranked;
  std::vector<double> valid, invalid;
  for (std::size_t f = 0; f < table.feature_count(); ++f) {
    valid.clear();
    invalid.clear();
    const auto col = table.column(f);
    for (std::size_t i = 0; i < table.size(); ++i) {
      (table.labels()[i] == Label::valid ? valid : invalid).push_back(col[i]);
    }
    double d = 0.0;
    try {
      d = std::abs(cohens_d(valid, invalid));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroVariance && e.kind() != ErrorKind::TooFewSamples) throw;
    }
    ranked.emplace_back(d, f);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  ranked.resize(std::min(pool_size, ranked.size()));

  TwoFeatureResult result;
  for (const auto& [d, f] : ranked) result.pool.push_back(table.features()[f]);

  const std::size_t n = table.size();
  struct Prepared {
    std::size_t col;
    std::vector<Cut> cuts;
    std::vector<std::size_t> order;     // rows sorted by value
    std::vector<std::size_t> cut_of;    // cut index of each position in `order`
  };
  std::vector<Prepared> prepared;
  for (const auto& [d, f] : ranked) {
    Prepared p;
    p.col = f;
    const auto col = table.column(f);
    p.cuts = cuts_of(col, table.labels());
    p.order.resize(n);
    std::iota(p.order.begin(), p.order.end(), std::size_t{0});
    std::stable_sort(p.order.begin(), p.order.end(),
                     [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
    p.cut_of.resize(n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p.cut_of[i] = k;
      if (i + 1 < n && col[p.order[i + 1]] != col[p.order[i]]) ++k;
    }
    prepared.push_back(std::move(p));
  }

  struct Best {
    bool have = false;
    std::uint64_t key = 0;
    double margin1 = 0, margin2 = 0, tau1 = 0, tau2 = 0;
    TwoFeatureRule rule;
    Confusion confusion;
  } best;
  auto consider = [&](std::uint64_t key, double m1, double m2, double t1, double t2,
                      const ThresholdRule& c1, const ThresholdRule& c2, const Confusion& conf) {
    bool take = !best.have;
    if (!take) {
      if (key != best.key) {
        take = key > best.key;
      } else if (m1 != best.margin1) {
        take = m1 > best.margin1;
      } else if (m2 != best.margin2) {
        take = m2 > best.margin2;
      } else if (t1 != best.tau1) {
        take = t1 < best.tau1;
      } else if (t2 != best.tau2) {
        take = t2 < best.tau2;
      }
    }
    if (!take) return;
    best.have = true;
    best.key = key;
    best.margin1 = m1;
    best.margin2 = m2;
    best.tau1 = t1;
    best.tau2 = t2;
    best.rule = {{c1, c2}};
    best.confusion = conf;
  };

  std::vector<char> pass1(n);
  std::vector<std::size_t> sv_le, si_le;
  for (std::size_t a = 0; a < prepared.size(); ++a) {
    for (std::size_t b = a + 1; b < prepared.size(); ++b) {
      const Prepared& pa = prepared[a];
      const Prepared& pb = prepared[b];
      const auto col_a = table.column(pa.col);
      const FeatureKey& key_a = table.features()[pa.col];
      const FeatureKey& key_b = table.features()[pb.col];
      for (Direction d1 : {Direction::below, Direction::above}) {
        for (const Cut& cut1 : pa.cuts) {
          const ThresholdRule c1{key_a, d1, cut1.threshold};
          std::size_t in_v = 0, in_i = 0;
          for (std::size_t i = 0; i < n; ++i) {
            pass1[i] = c1.passes(col_a[i]);
            if (pass1[i]) (table.labels()[i] == Label::valid ? in_v : in_i)++;
          }
          const std::size_t out_v = totals.valid - in_v, out_i = totals.invalid - in_i;
          // Cumulative passing counts at each cut of feature b.
          sv_le.assign(pb.cuts.size(), 0);
          si_le.assign(pb.cuts.size(), 0);
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = pb.order[i];
            if (!pass1[r]) continue;
            (table.labels()[r] == Label::valid ? sv_le : si_le)[pb.cut_of[i]]++;
          }
          for (std::size_t k = 1; k < pb.cuts.size(); ++k) {
            sv_le[k] += sv_le[k - 1];
            si_le[k] += si_le[k - 1];
          }
          for (std::size_t k = 0; k < pb.cuts.size(); ++k) {
            const Cut& cut2 = pb.cuts[k];
            for (Direction d2 : {Direction::below, Direction::above}) {
              Confusion c;
              if (d2 == Direction::below) {
                c.tp = sv_le[k];
                c.fp = si_le[k];
                c.tn = out_i + (in_i - si_le[k]);
                c.fn = out_v + (in_v - sv_le[k]);
              } else {
                c.tp = in_v - sv_le[k];
                c.fp = in_i - si_le[k];
                c.tn = out_i + si_le[k];
                c.fn = out_v + sv_le[k];
              }
              consider(objective_key(c, objective), cut1.margin, cut2.margin, cut1.threshold,
                       cut2.threshold, c1, ThresholdRule{key_b, d2, cut2.threshold}, c);
            }
          }
        }
      }
    }
  }
  result.rule = best.rule;
  result.confusion = best.confusion;
  result.objective = objective_value(best.confusion, objective);
  return result;
}

EvalReport eval_calibrated(const FeatureTable& table, Objective objective) {
  const Calibration c = calibrate_best(table, objective);
  EvalReport r;
  r.protocol = "calibrated";
  r.objective = objective;
  r.confusion = c.confusion;
  r.accuracy = c.confusion.accuracy();
  r.accuracy_ci = wilson_interval(c.confusion.correct(), c.confusion.total());
  r.rules = {c.rule};
  return r;
}

EvalReport eval_split(const FeatureTable& table, const SplitOptions& options) {
  if (!(options.train > 0.0 && options.val > 0.0 && options.train + options.val < 1.0)) {
    fail(ErrorKind::BadSpec, fmt::format("bad split ratios {}/{}", options.train, options.val));
  }
  if (table.size() < 10) {
    fail(ErrorKind::TooSmall, fmt::format("split evaluation needs 10 samples, got {}", table.size()));
  }
  Rng rng(options.seed);
  auto by_class = shuffled_by_class(table, rng);
  std::vector<std::size_t> train, val, test;
  for (auto& rows : by_class) {
    const std::size_t n = rows.size();
    if (n < 3) {
      fail(ErrorKind::TooSmall, fmt::format("split evaluation needs 3 samples per class, got {}", n));
    }
    const double nd = static_cast<double>(n);
    const auto n_test = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(nd * (1.0 - options.train - options.val))));
    const auto n_val =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(nd * options.val)));
    if (n_test + n_val >= n) fail(ErrorKind::TooSmall, "split leaves no training samples");
    const std::size_t n_train = n - n_val - n_test;
    train.insert(train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    val.insert(val.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train),
               rows.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    test.insert(test.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), rows.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  std::sort(test.begin(), test.end());
  check_disjoint(table, train, test);
  check_disjoint(table, val, test);

  const Calibration chosen = calibrate_best(table.subset(train), options.objective);
  const FeatureTable val_table = table.subset(val);
  const Calibration tuned = calibrate_feature(val_table, chosen.rule.feature,
                                              chosen.rule.direction, options.objective);
  const Confusion c = evaluate(tuned.rule, table.subset(test));

  EvalReport r;
  r.protocol = "split";
  r.seed = options.seed;
  r.objective = options.objective;
  r.confusion = c;
  r.accuracy = c.accuracy();
  r.accuracy_ci = wilson_interval(c.correct(), c.total());
  r.rules = {tuned.rule};
  r.validation_accuracy = tuned.confusion.accuracy();
  return r;
}

std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t k,
                                          std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::BadSpec, fmt::format("need at least 2 folds, got {}", k));
  Rng rng(seed);
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[labels[i] == Label::valid ? 0 : 1].push_back(i);
  }
  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t offset = 0;
  for (auto& rows : by_class) {
    shuffle(rows, rng);
    for (std::size_t p = 0; p < rows.size(); ++p) fold[rows[p]] = (offset + p) % k;
    offset += rows.size();
  }
  return fold;
}

FoldTrace evaluate_outer_fold(const FeatureTable& table, std::span<const std::size_t> train,
                              std::span<const std::size_t> test, const NestedOptions& options,
                              std::size_t fold_index) {
  check_disjoint(table, train, test);
  const FeatureTable fit = table.subset(train);
  const auto inner = stratified_folds(fit.labels(), options.inner,
                                      derive_seed(options.seed, fold_index + 1));

  std::vector<double> score_sum(fit.feature_count(), 0.0);
  for (std::size_t j = 0; j < options.inner; ++j) {
    std::vector<std::size_t> in_train, in_val;
    for (std::size_t i = 0; i < fit.size(); ++i) (inner[i] == j ? in_val : in_train).push_back(i);
    check_disjoint(fit, in_train, in_val);
    const FeatureTable t = fit.subset(in_train);
    const FeatureTable v = fit.subset(in_val);
    for (std::size_t f = 0; f < fit.feature_count(); ++f) {
      const Calibration c = calibrate_feature(t, fit.features()[f], std::nullopt, options.objective);
      score_sum[f] += objective_value(evaluate(c.rule, v), options.objective);
    }
  }
  std::size_t best = 0;
  for (std::size_t f = 1; f < score_sum.size(); ++f) {
    if (score_sum[f] > score_sum[best]) best = f;
  }

  const Calibration final_rule =
      calibrate_feature(fit, fit.features()[best], std::nullopt, options.objective);
  FoldTrace trace;
  trace.fold = fold_index;
  trace.rule = final_rule.rule;
  trace.inner_score = score_sum[best] / static_cast<double>(options.inner);
  trace.train_size = train.size();
  trace.test_size = test.size();
  trace.confusion = evaluate(final_rule.rule, table.subset(test));
  return trace;
}

EvalReport eval_nested_cv(const FeatureTable& table, const NestedOptions& options) {
  const std::size_t need = options.outer * options.inner;
  for (Label l : {Label::valid, Label::invalid}) {
    if (table.count(l) < need) {
      fail(ErrorKind::TooSmall,
           fmt::format("nested {}x{} CV needs {} {} samples, got {}", options.outer, options.inner,
                       need, to_string(l), table.count(l)));
    }
  }
  const auto outer = stratified_folds(table.labels(), options.outer, options.seed);

  EvalReport r;
  r.protocol = "nested";
  r.seed = options.seed;
  r.objective = options.objective;
  std::vector<double> accuracies;
  std::vector<std::size_t> covered(table.size(), 0);
  for (std::size_t f = 0; f < options.outer; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < table.size(); ++i) (outer[i] == f ? test : train).push_back(i);
    for (std::size_t i : test) ++covered[i];
    FoldTrace trace = evaluate_outer_fold(table, train, test, options, f);
    accuracies.push_back(trace.confusion.accuracy());
    r.confusion += trace.confusion;
    r.folds.push_back(std::move(trace));
  }
  if (std::any_of(covered.begin(), covered.end(), [](std::size_t c) { return c != 1; })) {
    fail(ErrorKind::LeakageDetected, "outer folds do not partition the corpus");
  }
  r.accuracy = mean_of(accuracies);
  r.accuracy_sd = sd_of(accuracies);
  r.accuracy_ci = wilson_interval(r.confusion.correct(), r.confusion.total());

  for (const auto& trace : r.folds) {
    auto it = std::find_if(r.selected_configs.begin(), r.selected_configs.end(),
                           [&](const ConfigCount& c) { return c.feature == trace.rule.feature; });
    if (it == r.selected_configs.end()) {
      r.selected_configs.push_back({trace.rule.feature, 1});
    } else {
      ++it->count;
    }
  }
  std::stable_sort(r.selected_configs.begin(), r.selected_configs.end(),
                   [](const ConfigCount& a, const ConfigCount& b) { return a.count > b.count; });
  return r;
}

std::vector<double> default_multipliers() {
  std::vector<double> m;
  for (int i = 80; i <= 120; i += 5) m.push_back(i / 100.0);
  return m;
}

std::vector<CurvePoint> threshold_robustness(const ThresholdRule& rule, const FeatureTable& table,
                                             std::span<const double> multipliers) {
  std::vector<CurvePoint> curve;
  for (double m : multipliers) {
    ThresholdRule scaled = rule;
    scaled.threshold = rule.threshold * m;
    curve.push_back({m, scaled.threshold, evaluate(scaled, table).accuracy()});
  }
  return curve;
}

EvalReport transfer_rule(const ThresholdRule& rule, const FeatureTable& target,
                         Objective objective) {
  if (target.size() == 0) fail(ErrorKind::TooSmall, "transfer target is empty");
  target.require_feature(rule.feature);
  const Confusion raw = evaluate(rule, target);
  const Calibration recal = calibrate_feature(target, rule.feature, std::nullopt, objective);

  EvalReport r;
  r.protocol = "transfer";
  r.objective = objective;
  r.confusion = raw;
  r.accuracy = raw.accuracy();
  r.accuracy_ci = wilson_interval(raw.correct(), raw.total());
  r.rules = {rule, recal.rule};
  r.recalibrated_accuracy = recal.confusion.accuracy();
  return r;
}

std::vector<LearningPoint> calibration_curve(const FeatureTable& table,
                                             const LearningCurveOptions& options) {
  if (!(options.holdout > 0.0 && options.holdout < 1.0)) {
    fail(ErrorKind::BadSpec, fmt::format("holdout fraction {} outside (0, 1)", options.holdout));
  }
  Rng rng(options.seed);
  auto by_class = shuffled_by_class(table, rng);
  std::vector<std::size_t> holdout;
  std::array<std::vector<std::size_t>, 2> pool;
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& rows = by_class[c];
    if (rows.size() < 2) {
      fail(ErrorKind::TooSmall, "learning curve needs two samples per class");
    }
    const auto n_hold = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * options.holdout)),
        1, rows.size() - 1);
    holdout.insert(holdout.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_hold));
    pool[c].assign(rows.begin() + static_cast<std::ptrdiff_t>(n_hold), rows.end());
  }
  std::sort(holdout.begin(), holdout.end());
  const FeatureTable held = table.subset(holdout);
  const std::size_t pool_size = pool[0].size() + pool[1].size();

  std::vector<LearningPoint> curve;
  for (std::size_t size : options.sizes) {
    if (size < 2 || size > pool_size) continue;
    const double share = static_cast<double>(pool[0].size()) / static_cast<double>(pool_size);
    std::size_t n_valid = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(static_cast<double>(size) * share)), 1, size - 1);
    n_valid = std::min(n_valid, pool[0].size());
    const std::size_t n_invalid = std::min(size - n_valid, pool[1].size());
    std::vector<double> acc;
    for (std::size_t rep = 0; rep < options.repeats; ++rep) {
      std::vector<std::size_t> pick;
      for (std::size_t c = 0; c < 2; ++c) {
        auto rows = pool[c];
        shuffle(rows, rng);
        rows.resize(c == 0 ? n_valid : n_invalid);
        pick.insert(pick.end(), rows.begin(), rows.end());
      }
      std::sort(pick.begin(), pick.end());
      check_disjoint(table, pick, holdout);
      const Calibration c = calibrate_best(table.subset(pick), options.objective);
      acc.push_back(evaluate(c.rule, held).accuracy());
    }
    curve.push_back({size, mean_of(acc), sd_of(acc), options.repeats});
  }
  return curve;
}

}  // namespace attn_spectra

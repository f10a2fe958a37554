#include "attn_spectra/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "attn_spectra/archive.hpp"
#include "attn_spectra/baselines.hpp"
#include "attn_spectra/classifier.hpp"
#include "attn_spectra/corpus.hpp"
#include "attn_spectra/error.hpp"
#include "attn_spectra/feature_table.hpp"
#include "attn_spectra/fileutil.hpp"
#include "attn_spectra/pipeline.hpp"
#include "attn_spectra/random.hpp"
#include "attn_spectra/report.hpp"
#include "attn_spectra/stats.hpp"
#include "attn_spectra/synthlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace attn_spectra::cli {

namespace {

constexpr std::string_view kTool = "attn-spectra";

std::size_t default_jobs() {
  if (const char* env = std::getenv("ATTN_SPECTRA_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

// Conventions that shape every number in a report.
json conventions() {
  return json{
      {"head_mass", "raw sum of stored attention"},
      {"layer_pairing", "post-block"},
      {"d_sign", "valid - invalid, pooled sd"},
      {"mann_whitney",
       {{"exact_when_n_at_most", 12}, {"exact_requires_no_ties", true}, {"continuity_correction", true}}},
      {"fdr_family", "all scanned (metric, layer) rows, Mann-Whitney p-values"},
      {"threshold_boundary", "below: valid iff score <= t; above: valid iff score > t"},
      {"threshold_candidates", "midpoints of adjacent unique scores plus the maximum"},
      {"baselines", "per row, then uniform mean over rows, heads and layers; natural log"},
      {"folds", "stratified by label"},
  };
}

json make_metadata(std::string_view command, const json& config, std::uint64_t seed) {
  json meta;
  meta["tool"] = kTool;
  meta["version"] = ATTN_SPECTRA_VERSION;
  meta["command"] = command;
  meta["config"] = config;
  meta["config_hash"] = fileutil::fnv1a_hex(config.dump());
  meta["seed"] = seed;
  meta["conventions"] = conventions();
  return meta;
}

FeatureKey parse_feature(std::string_view text) {
  const auto at = text.find('@');
  if (at == std::string_view::npos) {
    fail(ErrorKind::BadSpec, fmt::format("feature '{}' is not of the form metric@layer", text));
  }
  std::string_view layer = text.substr(at + 1);
  if (!layer.empty() && (layer.front() == 'L' || layer.front() == 'l')) layer.remove_prefix(1);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(layer.data(), layer.data() + layer.size(), value);
  if (ec != std::errc() || ptr != layer.data() + layer.size() || value < 0) {
    fail(ErrorKind::BadSpec, fmt::format("feature '{}' has a bad layer", text));
  }
  return {std::string(text.substr(0, at)), value};
}

std::size_t metric_rank(std::string_view metric) {
  return static_cast<std::size_t>(std::find(metric::all.begin(), metric::all.end(), metric) -
                                  metric::all.begin());
}

// ---------------------------------------------------------------- inputs

struct TableInput {
  fs::path manifest;
  fs::path diagnostics;  // default: diagnostics.csv beside the manifest
  std::vector<std::string> metrics;
  std::optional<int> layer;
};

fs::path diagnostics_path(const TableInput& in) {
  return in.diagnostics.empty() ? in.manifest.parent_path() / "diagnostics.csv" : in.diagnostics;
}

json describe(const TableInput& in) {
  return json{{"metrics", in.metrics}, {"layer", in.layer ? json(*in.layer) : json(nullptr)}};
}

struct LoadedTable {
  FeatureTable table;
  std::vector<std::string> dropped;
};

LoadedTable load_table(const TableInput& in) {
  const CorpusManifest corpus = load_corpus(in.manifest);
  const auto rows = read_diagnostics_csv(diagnostics_path(in));
  LoadedTable out;
  FeatureTable full = FeatureTable::from_rows(rows, corpus, &out.dropped);

  const bool all = std::find(in.metrics.begin(), in.metrics.end(), "all") != in.metrics.end();
  std::vector<std::string> metrics = in.metrics;
  if (metrics.empty()) {
    for (auto m : metric::spectral) metrics.emplace_back(m);
  }
  FeatureTable picked = all ? full : full.select_metrics(metrics);

  if (in.layer) {
    std::vector<FeatureKey> keys;
    std::vector<std::vector<double>> columns;
    for (std::size_t f = 0; f < picked.feature_count(); ++f) {
      if (picked.features()[f].layer != *in.layer) continue;
      keys.push_back(picked.features()[f]);
      const auto col = picked.column(f);
      columns.emplace_back(col.begin(), col.end());
    }
    picked = FeatureTable(picked.ids(), picked.labels(), std::move(keys), std::move(columns));
  }
  if (picked.feature_count() == 0) {
    fail(ErrorKind::MissingFeature, "no diagnostics match the requested metrics/layer");
  }
  out.table = std::move(picked);
  return out;
}

json input_summary(const LoadedTable& t) {
  return json{{"samples", t.table.size()},
              {"valid", t.table.count(Label::valid)},
              {"invalid", t.table.count(Label::invalid)},
              {"features", t.table.feature_count()},
              {"dropped", t.dropped}};
}

void add_table_options(CLI::App* sub, TableInput& in) {
  sub->add_option("--manifest", in.manifest, "Corpus manifest (JSON)")->required();
  sub->add_option("--diagnostics", in.diagnostics,
                  "diagnostics.csv (default: beside the manifest)");
  sub->add_option("--metric", in.metrics,
                  "Metric(s) to use; 'all' includes baselines (default: the five spectral metrics)");
  sub->add_option("--layer", in.layer, "Restrict to one layer");
}

void summarize_eval(const EvalReport& r, std::ostream& out) {
  fmt::print(out, "{}: accuracy {:.4f} (95% CI {:.4f}-{:.4f}, n={})", r.protocol, r.accuracy,
             r.accuracy_ci.lower, r.accuracy_ci.upper, r.confusion.total());
  if (r.protocol == "nested") fmt::print(out, " ± {:.4f}", r.accuracy_sd);
  fmt::print(out, "\n");
  for (const auto& rule : r.rules) {
    fmt::print(out, "  rule {} {} {}\n", to_string(rule.feature), to_string(rule.direction),
               rule.threshold);
  }
  if (r.two_feature) {
    for (const auto& c : r.two_feature->clauses) {
      fmt::print(out, "  clause {} {} {}\n", to_string(c.feature), to_string(c.direction),
                 c.threshold);
    }
  }
  for (const auto& c : r.selected_configs) {
    fmt::print(out, "  selected {} in {} fold(s)\n", to_string(c.feature), c.count);
  }
  if (r.recalibrated_accuracy) fmt::print(out, "  recalibrated accuracy {:.4f}\n", *r.recalibrated_accuracy);
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
  fs::path manifest;
  fs::path out;  // default: the manifest's directory
  std::string laplacian = "combinatorial";
  std::string aggregation = "mass";
  std::optional<std::size_t> hfer_cutoff;
  std::size_t jobs = 1;
  bool force = false;
};

struct SampleResult {
  bool ok = false;
  std::vector<DiagnosticRow> rows;
  std::vector<std::string> warnings;
  std::string error_kind;
  std::string error;
};

SampleResult analyze_entry(const CorpusEntry& entry, const PipelineConfig& config) {
  SampleResult r;
  try {
    if (entry.archive.empty()) fail(ErrorKind::MissingArchive, "entry has no archive");
    const TensorArchive archive = load_archive(entry.archive);
    DiagnosticsRecord record = analyze_sample(archive, config);
    const BaselineRecord base = compute_baselines(archive);
    r.rows = record.to_rows();
    const auto extra = base.to_rows();
    r.rows.insert(r.rows.end(), extra.begin(), extra.end());
    for (auto& row : r.rows) row.sample_id = entry.id;
    std::stable_sort(r.rows.begin(), r.rows.end(), [](const DiagnosticRow& a, const DiagnosticRow& b) {
      if (a.layer != b.layer) return a.layer < b.layer;
      return metric_rank(a.metric) < metric_rank(b.metric);
    });
    r.warnings = std::move(record.warnings);
    if (base.zero_rows) {
      r.warnings.push_back(fmt::format("{} all-zero attention rows skipped by gini", base.zero_rows));
    }
    r.ok = true;
  } catch (const Error& e) {
    r.error_kind = std::string(to_string(e.kind()));
    r.error = e.detail();
  } catch (const std::exception& e) {
    r.error_kind = "Exception";
    r.error = e.what();
  }
  return r;
}

int cmd_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  const CorpusManifest corpus = load_corpus(o.manifest);
  PipelineConfig config;
  config.laplacian = parse_laplacian_kind(o.laplacian);
  config.aggregation = parse_aggregation(o.aggregation);
  config.hfer_cutoff = o.hfer_cutoff;

  const json cfg = to_json(config);
  const json meta = make_metadata("analyze", cfg, 0);
  const std::string hash = meta["config_hash"];

  const fs::path out_dir = o.out.empty() ? o.manifest.parent_path() : o.out;
  fileutil::ensure_directory(out_dir);
  const fs::path state_path = out_dir / "analyze.json";
  const fs::path diag_path = out_dir / "diagnostics.csv";

  // Resume: reuse rows of samples completed under the same configuration.
  std::map<std::string, std::vector<DiagnosticRow>> reused;
  std::map<std::string, std::vector<std::string>> reused_warnings;
  if (!o.force && fs::exists(state_path)) {
    json state;
    try {
      state = json::parse(fileutil::read_text(state_path));
    } catch (const json::exception& e) {
      fail(ErrorKind::MalformedHeader, fmt::format("{}: {}", state_path.string(), e.what()));
    }
    const std::string previous = state.at("metadata").at("config_hash");
    if (previous != hash) {
      fail(ErrorKind::BadSpec,
           fmt::format("'{}' was produced with a different configuration ({} vs {}); rerun with --force",
                       out_dir.string(), previous, hash));
    }
    std::set<std::string> completed;
    for (const auto& id : state.at("completed")) completed.insert(id.get<std::string>());
    if (fs::exists(diag_path)) {
      for (auto& row : read_diagnostics_csv(diag_path)) {
        if (completed.count(row.sample_id)) reused[row.sample_id].push_back(std::move(row));
      }
    }
    if (state.contains("warnings")) {
      for (const auto& [id, list] : state.at("warnings").items()) {
        reused_warnings[id] = list.get<std::vector<std::string>>();
      }
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    if (!reused.count(corpus.entries[i].id)) pending.push_back(i);
  }

  std::vector<SampleResult> results(corpus.entries.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < pending.size();) {
      const auto& entry = corpus.entries[pending[k]];
      results[pending[k]] = analyze_entry(entry, config);
      const auto& r = results[pending[k]];
      if (!r.ok) {
        std::lock_guard lock(log_mutex);
        fmt::print(err, "sample '{}' failed: {}: {}\n", entry.id, r.error_kind, r.error);
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(o.jobs, pending.size()));
  std::vector<std::thread> threads;
  for (std::size_t j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  std::vector<DiagnosticRow> rows;
  json completed = json::array();
  json failed = json::array();
  json warnings = json::object();
  std::size_t n_failed = 0;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto& id = corpus.entries[i].id;
    if (auto it = reused.find(id); it != reused.end()) {
      rows.insert(rows.end(), it->second.begin(), it->second.end());
      completed.push_back(id);
      if (auto w = reused_warnings.find(id); w != reused_warnings.end() && !w->second.empty()) {
        warnings[id] = w->second;
      }
      continue;
    }
    const auto& r = results[i];
    if (r.ok) {
      rows.insert(rows.end(), r.rows.begin(), r.rows.end());
      completed.push_back(id);
      if (!r.warnings.empty()) warnings[id] = r.warnings;
    } else {
      ++n_failed;
      failed.push_back(json{{"id", id}, {"kind", r.error_kind}, {"message", r.error}});
    }
  }

  json state;
  state["metadata"] = meta;
  state["completed"] = completed;
  state["failed"] = failed;
  state["warnings"] = warnings;
  {
    fileutil::DirectoryLock lock(out_dir);
    write_diagnostics_csv(diag_path, rows);
    fileutil::write_atomic(state_path, state.dump(2) + "\n");
  }
  fmt::print(out, "analyzed {}, reused {}, failed {}; {} rows -> {}\n",
             pending.size() - n_failed, reused.size(), n_failed, rows.size(), diag_path.string());
  return n_failed ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------- scan

struct ScanCmdOptions {
  TableInput input;
  fs::path out;
  double fdr = 0.05;
};

int cmd_scan(const ScanCmdOptions& o, std::ostream& out) {
  const LoadedTable loaded = load_table(o.input);
  ScanOptions options;
  options.fdr = o.fdr;

  ResultBundle bundle;
  bundle.scan = scan(loaded.table, options);
  json cfg = describe(o.input);
  cfg["fdr"] = o.fdr;
  bundle.metadata = make_metadata("scan", cfg, 0);
  bundle.metadata["inputs"] = input_summary(loaded);

  // Correlations among the spectral metrics at the top-ranked layer.
  const int top_layer = bundle.scan.front().layer;
  std::vector<std::string> present;
  for (auto m : metric::spectral) {
    if (loaded.table.feature_index({std::string(m), top_layer})) present.emplace_back(m);
  }
  json corr = nullptr;
  if (present.size() >= 2 && loaded.table.size() >= 3) {
    const auto matrix = metric_correlations(loaded.table, top_layer, present);
    corr = json{{"layer", top_layer}, {"metrics", matrix.metrics}, {"r", json::array()}};
    for (const auto& row : matrix.r) {
      json jr = json::array();
      for (const auto& v : row) jr.push_back(v ? json(*v) : json(nullptr));
      corr["r"].push_back(jr);
    }
  }
  bundle.metadata["correlations"] = corr;
  write_results(bundle, o.out);

  const auto rejected = std::count_if(bundle.scan.begin(), bundle.scan.end(),
                                      [](const ScanRow& r) { return r.rejected; });
  const auto& top = bundle.scan.front();
  fmt::print(out, "scan: {} rows, {} rejected at q={}; top {}@L{} d={:.4f} p_mw={:.3g}\n",
             bundle.scan.size(), rejected, o.fdr, top.metric, top.layer, top.cohens_d, top.p_mw);
  return kExitOk;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateOptions {
  TableInput input;
  fs::path out;
  std::string objective = "accuracy";
  bool two_feature = false;
  std::size_t pool = 10;
  std::vector<std::size_t> calibration_sizes;
  std::size_t repeats = 20;
  std::uint64_t seed = 0;
};

int cmd_calibrate(const CalibrateOptions& o, std::ostream& out) {
  const LoadedTable loaded = load_table(o.input);
  const Objective objective = parse_objective(o.objective);
  EvalReport report;
  if (o.two_feature) {
    const TwoFeatureResult r = search_two_feature(loaded.table, o.pool, objective);
    report.protocol = "two-feature";
    report.objective = objective;
    report.two_feature = r.rule;
    report.confusion = r.confusion;
    report.accuracy = r.confusion.accuracy();
    report.accuracy_ci = wilson_interval(r.confusion.correct(), r.confusion.total());
  } else {
    report = eval_calibrated(loaded.table, objective);
  }
  report.seed = o.seed;
  if (!o.calibration_sizes.empty()) {
    LearningCurveOptions lc;
    lc.sizes = o.calibration_sizes;
    lc.repeats = o.repeats;
    lc.seed = o.seed;
    lc.objective = objective;
    report.learning_curve = calibration_curve(loaded.table, lc);
  }
  json cfg = describe(o.input);
  cfg["objective"] = o.objective;
  cfg["two_feature"] = o.two_feature;
  cfg["pool"] = o.pool;
  cfg["calibration_sizes"] = o.calibration_sizes;
  cfg["repeats"] = o.repeats;

  ResultBundle bundle;
  bundle.metadata = make_metadata("calibrate", cfg, o.seed);
  bundle.metadata["inputs"] = input_summary(loaded);
  bundle.eval = report;
  write_results(bundle, o.out);
  summarize_eval(report, out);
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  TableInput input;
  fs::path out;
  std::string protocol = "nested";
  std::string objective = "accuracy";
  std::size_t outer = 5;
  std::size_t inner = 4;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const LoadedTable loaded = load_table(o.input);
  const Objective objective = parse_objective(o.objective);
  EvalReport report;
  if (o.protocol == "nested") {
    report = eval_nested_cv(loaded.table, {o.outer, o.inner, o.seed, objective});
  } else if (o.protocol == "split") {
    SplitOptions s;
    s.seed = o.seed;
    s.objective = objective;
    report = eval_split(loaded.table, s);
  } else if (o.protocol == "calibrated") {
    report = eval_calibrated(loaded.table, objective);
    report.seed = o.seed;
  } else {
    fail(ErrorKind::BadSpec, fmt::format("unknown protocol '{}'", o.protocol));
  }
  json cfg = describe(o.input);
  cfg["protocol"] = o.protocol;
  cfg["objective"] = o.objective;
  cfg["outer"] = o.outer;
  cfg["inner"] = o.inner;

  ResultBundle bundle;
  bundle.metadata = make_metadata("eval", cfg, o.seed);
  bundle.metadata["inputs"] = input_summary(loaded);
  bundle.eval = report;
  write_results(bundle, o.out);
  summarize_eval(report, out);
  return kExitOk;
}

// ---------------------------------------------------------------- robustness

struct RobustnessOptions {
  TableInput input;
  fs::path out;
  std::string objective = "accuracy";
  std::vector<double> multipliers;
};

int cmd_robustness(const RobustnessOptions& o, std::ostream& out) {
  const LoadedTable loaded = load_table(o.input);
  const Objective objective = parse_objective(o.objective);
  const Calibration c = calibrate_best(loaded.table, objective);
  const auto multipliers = o.multipliers.empty() ? default_multipliers() : o.multipliers;

  EvalReport report;
  report.protocol = "robustness";
  report.objective = objective;
  report.confusion = c.confusion;
  report.accuracy = c.confusion.accuracy();
  report.accuracy_ci = wilson_interval(c.confusion.correct(), c.confusion.total());
  report.rules = {c.rule};
  report.robustness = threshold_robustness(c.rule, loaded.table, multipliers);

  json cfg = describe(o.input);
  cfg["objective"] = o.objective;
  cfg["multipliers"] = multipliers;
  ResultBundle bundle;
  bundle.metadata = make_metadata("robustness", cfg, 0);
  bundle.metadata["inputs"] = input_summary(loaded);
  bundle.eval = report;
  write_results(bundle, o.out);
  summarize_eval(report, out);
  for (const auto& p : report.robustness) {
    fmt::print(out, "  x{:.2f} -> {:.4f}\n", p.multiplier, p.accuracy);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- transfer

struct TransferOptions {
  TableInput source;
  fs::path target_manifest;
  fs::path target_diagnostics;
  fs::path out;
  std::string objective = "accuracy";
};

int cmd_transfer(const TransferOptions& o, std::ostream& out) {
  const LoadedTable source = load_table(o.source);
  TableInput target_in = o.source;
  target_in.manifest = o.target_manifest;
  target_in.diagnostics = o.target_diagnostics;
  const LoadedTable target = load_table(target_in);
  const Objective objective = parse_objective(o.objective);

  const Calibration c = calibrate_best(source.table, objective);
  EvalReport report = transfer_rule(c.rule, target.table, objective);

  json cfg = describe(o.source);
  cfg["objective"] = o.objective;
  ResultBundle bundle;
  bundle.metadata = make_metadata("transfer", cfg, 0);
  bundle.metadata["inputs"] = json{{"source", input_summary(source)}, {"target", input_summary(target)}};
  bundle.metadata["source_accuracy"] = c.confusion.accuracy();
  bundle.eval = report;
  write_results(bundle, o.out);
  summarize_eval(report, out);
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  fs::path out;
  std::string mode = "archives";
  std::optional<std::size_t> n_per_class;
  std::uint64_t seed = 0;
  // archives
  std::size_t tokens = 16;
  std::size_t layers = 4;
  std::size_t heads = 2;
  std::size_t width = 8;
  std::string recipe = "random-stochastic";
  std::size_t band_width = 4;
  double dc_offset = 0.5;  // added to invalid samples' hidden states
  // table
  int table_layers = 32;
  std::vector<std::string> informative = {"hfer@5"};
  double effect = 3.0;
  bool valid_higher = false;
  double location = 0.2515;
  double noise_sd = 0.05433;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  fileutil::ensure_directory(o.out);
  const fs::path manifest_path = o.out / "manifest.json";
  json cfg;
  cfg["mode"] = o.mode;
  if (o.mode == "archives") {
    const std::size_t n = o.n_per_class.value_or(3);
    if (n == 0 || o.tokens < 2 || o.layers == 0 || o.heads == 0 || o.width == 0) {
      fail(ErrorKind::BadSpec, "synthetic archives need n >= 1, N >= 2 and positive L, H, d");
    }
    const AttentionRecipe recipe = parse_recipe(o.recipe);
    cfg.update(json{{"n_per_class", n}, {"tokens", o.tokens}, {"layers", o.layers},
                    {"heads", o.heads}, {"width", o.width}, {"recipe", o.recipe},
                    {"band_width", o.band_width}, {"dc_offset", o.dc_offset}});
    CorpusManifest corpus;
    fileutil::ensure_directory(o.out / "archives");
    for (std::size_t i = 0; i < 2 * n; ++i) {
      SyntheticArchiveSpec spec;
      spec.sample_id = fmt::format("x{:04d}", i);
      spec.label = i < n ? Label::valid : Label::invalid;
      spec.tokens = o.tokens;
      spec.layers = o.layers;
      spec.heads = o.heads;
      spec.hidden_width = o.width;
      spec.recipe = recipe;
      spec.band_width = o.band_width;
      spec.dc_offset = i < n ? 0.0 : o.dc_offset;
      spec.seed = derive_seed(o.seed, i);
      const fs::path dir = o.out / "archives" / spec.sample_id;
      write_archive(make_synthetic_archive(spec), dir);
      corpus.entries.push_back({spec.sample_id, dir, spec.label, {}, std::nullopt});
    }
    write_corpus(corpus, manifest_path);
    fmt::print(out, "wrote {} archives and {}\n", corpus.entries.size(), manifest_path.string());
  } else if (o.mode == "table") {
    PlantedCorpusSpec spec;
    spec.n_per_class = o.n_per_class.value_or(227);
    spec.layers = o.table_layers;
    spec.location = o.location;
    spec.noise_sd = o.noise_sd;
    spec.seed = o.seed;
    for (const auto& text : o.informative) {
      const FeatureKey key = parse_feature(text);
      spec.informative.push_back({key.metric, key.layer, o.effect, !o.valid_higher});
    }
    cfg.update(json{{"n_per_class", spec.n_per_class}, {"layers", spec.layers},
                    {"informative", o.informative}, {"effect", o.effect},
                    {"valid_higher", o.valid_higher}, {"location", o.location},
                    {"noise_sd", o.noise_sd}});
    const PlantedCorpus planted = make_planted_corpus(spec);
    write_corpus(planted.corpus, manifest_path);
    write_diagnostics_csv(o.out / "diagnostics.csv", planted.table.to_rows());
    fmt::print(out, "wrote {} labeled samples x {} features to {}\n", planted.table.size(),
               planted.table.feature_count(), o.out.string());
  } else {
    fail(ErrorKind::BadSpec, fmt::format("unknown synth mode '{}'", o.mode));
  }
  fileutil::write_atomic(o.out / "synth.json", make_metadata("synth", cfg, o.seed).dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral diagnostics of attention graphs", std::string(kTool)};
  app.set_version_flag("--version", ATTN_SPECTRA_VERSION);
  app.require_subcommand(1);

  AnalyzeOptions analyze;
  analyze.jobs = default_jobs();
  auto* a = app.add_subcommand("analyze", "Compute per-layer diagnostics for every archive");
  a->set_config("--config", "", "TOML file with option defaults");
  a->add_option("--manifest", analyze.manifest, "Corpus manifest (JSON)")->required();
  a->add_option("--out", analyze.out, "Output directory (default: beside the manifest)");
  a->add_option("--laplacian", analyze.laplacian, "combinatorial | sym | rw");
  a->add_option("--aggregation", analyze.aggregation, "mass | uniform | max");
  a->add_option("--hfer-cutoff", analyze.hfer_cutoff, "Low/high mode cutoff K (default floor(N/2))");
  a->add_option("--jobs", analyze.jobs, "Worker threads (env ATTN_SPECTRA_JOBS)");
  a->add_flag("--force", analyze.force, "Recompute everything");

  ScanCmdOptions scan_opts;
  auto* s = app.add_subcommand("scan", "Effect sizes and tests for every (metric, layer)");
  s->set_config("--config", "", "TOML file with option defaults");
  add_table_options(s, scan_opts.input);
  s->add_option("--out", scan_opts.out, "Output directory")->required();
  s->add_option("--fdr", scan_opts.fdr, "Benjamini-Hochberg level");

  CalibrateOptions cal;
  auto* c = app.add_subcommand("calibrate", "Calibrate a threshold rule on the whole corpus");
  c->set_config("--config", "", "TOML file with option defaults");
  add_table_options(c, cal.input);
  c->add_option("--out", cal.out, "Output directory")->required();
  c->add_option("--objective", cal.objective, "accuracy | balanced");
  c->add_flag("--two-feature", cal.two_feature, "Search two-feature conjunctions");
  c->add_option("--pool", cal.pool, "Candidate features for --two-feature");
  c->add_option("--calibration-sizes", cal.calibration_sizes, "Learning-curve subset sizes")
      ->delimiter(',');
  c->add_option("--repeats", cal.repeats, "Draws per learning-curve size");
  c->add_option("--seed", cal.seed, "Seed");

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Held-out evaluation of threshold rules");
  e->set_config("--config", "", "TOML file with option defaults");
  add_table_options(e, ev.input);
  e->add_option("--out", ev.out, "Output directory")->required();
  e->add_option("--protocol", ev.protocol, "nested | split | calibrated");
  e->add_option("--objective", ev.objective, "accuracy | balanced");
  e->add_option("--outer", ev.outer, "Outer folds");
  e->add_option("--inner", ev.inner, "Inner folds");
  e->add_option("--seed", ev.seed, "Seed");

  RobustnessOptions rob;
  auto* r = app.add_subcommand("robustness", "Accuracy under scaled thresholds");
  r->set_config("--config", "", "TOML file with option defaults");
  add_table_options(r, rob.input);
  r->add_option("--out", rob.out, "Output directory")->required();
  r->add_option("--objective", rob.objective, "accuracy | balanced");
  r->add_option("--multipliers", rob.multipliers, "Threshold multipliers")->delimiter(',');

  TransferOptions tr;
  auto* t = app.add_subcommand("transfer", "Apply a rule calibrated on one corpus to another");
  t->set_config("--config", "", "TOML file with option defaults");
  add_table_options(t, tr.source);
  t->add_option("--target-manifest", tr.target_manifest, "Target corpus manifest")->required();
  t->add_option("--target-diagnostics", tr.target_diagnostics,
                "Target diagnostics.csv (default: beside the target manifest)");
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--objective", tr.objective, "accuracy | balanced");

  SynthOptions syn;
  auto* y = app.add_subcommand("synth", "Write a synthetic corpus");
  y->set_config("--config", "", "TOML file with option defaults");
  y->add_option("--out", syn.out, "Output directory")->required();
  y->add_option("--mode", syn.mode, "archives | table");
  y->add_option("--n-per-class", syn.n_per_class, "Samples per class");
  y->add_option("--seed", syn.seed, "Seed");
  y->add_option("--tokens", syn.tokens, "N (archives)");
  y->add_option("--layers", syn.layers, "L (archives)");
  y->add_option("--heads", syn.heads, "H (archives)");
  y->add_option("--width", syn.width, "d (archives)");
  y->add_option("--recipe", syn.recipe, "uniform | onehot | banded | random-stochastic");
  y->add_option("--band-width", syn.band_width, "Window for the banded recipe");
  y->add_option("--dc-offset", syn.dc_offset, "Offset added to invalid samples' hidden states");
  y->add_option("--table-layers", syn.table_layers, "Layers in the planted table");
  y->add_option("--informative", syn.informative, "Planted cells, e.g. hfer@5");
  y->add_option("--effect", syn.effect, "Planted Cohen's d");
  y->add_flag("--valid-higher", syn.valid_higher, "Valid class mean above invalid");
  y->add_option("--location", syn.location, "Midpoint of the class means");
  y->add_option("--noise-sd", syn.noise_sd, "Within-class sd");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitFatal;
  }

  try {
    if (a->parsed()) return cmd_analyze(analyze, out, err);
    if (s->parsed()) return cmd_scan(scan_opts, out);
    if (c->parsed()) return cmd_calibrate(cal, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (r->parsed()) return cmd_robustness(rob, out);
    if (t->parsed()) return cmd_transfer(tr, out);
    if (y->parsed()) return cmd_synth(syn, out);
  } catch (const Error& ex) {
    fmt::print(err, "error: {}\n", ex.what());
    return kExitFatal;
  } catch (const std::exception& ex) {
    fmt::print(err, "error: {}\n", ex.what());
    return kExitFatal;
  }
  return kExitFatal;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace attn_spectra::cli

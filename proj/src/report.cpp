#include "attn_spectra/report.hpp"

#include <charconv>
#include <sstream>

#include <fmt/format.h>

#include "attn_spectra/error.hpp"
#include "attn_spectra/fileutil.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace attn_spectra {

namespace {

constexpr std::string_view kScanHeader = "metric,layer,d,p_mw,p_t,p_bh,valid_mean,invalid_mean";

json to_json(const FeatureKey& key) { return json{{"metric", key.metric}, {"layer", key.layer}}; }

FeatureKey key_from_json(const json& j) {
  return {j.at("metric").get<std::string>(), j.at("layer").get<int>()};
}

json to_json(const Confusion& c) {
  return json{{"tp", c.tp}, {"fn", c.fn}, {"fp", c.fp}, {"tn", c.tn}};
}

Confusion confusion_from_json(const json& j) {
  return {j.at("tp").get<std::size_t>(), j.at("fn").get<std::size_t>(),
          j.at("fp").get<std::size_t>(), j.at("tn").get<std::size_t>()};
}

template <typename T>
T parse_field(std::string_view text, const fs::path& path, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorKind::MalformedHeader,
         fmt::format("{}:{}: cannot parse number '{}'", path.string(), line_no, text));
  }
  return value;
}

}  // namespace

json to_json(const ScanRow& row) {
  return json{{"metric", row.metric},     {"layer", row.layer},
              {"d", row.cohens_d},        {"p_mw", row.p_mw},
              {"p_t", row.p_t},           {"p_bh", row.p_bh},
              {"valid_mean", row.valid_mean}, {"invalid_mean", row.invalid_mean},
              {"rejected", row.rejected}};
}

ScanRow scan_row_from_json(const json& j) {
  ScanRow r;
  r.metric = j.at("metric").get<std::string>();
  r.layer = j.at("layer").get<int>();
  r.cohens_d = j.at("d").get<double>();
  r.p_mw = j.at("p_mw").get<double>();
  r.p_t = j.at("p_t").get<double>();
  r.p_bh = j.at("p_bh").get<double>();
  r.valid_mean = j.at("valid_mean").get<double>();
  r.invalid_mean = j.at("invalid_mean").get<double>();
  r.rejected = j.at("rejected").get<bool>();
  return r;
}

json to_json(const ThresholdRule& rule) {
  return json{{"metric", rule.feature.metric},
              {"layer", rule.feature.layer},
              {"direction", std::string(to_string(rule.direction))},
              {"threshold", rule.threshold}};
}

ThresholdRule rule_from_json(const json& j) {
  return {key_from_json(j), parse_direction(j.at("direction").get<std::string>()),
          j.at("threshold").get<double>()};
}

json to_json(const EvalReport& r) {
  json j;
  j["protocol"] = r.protocol;
  j["seed"] = r.seed;
  j["objective"] = std::string(to_string(r.objective));
  j["accuracy"] = r.accuracy;
  j["accuracy_sd"] = r.accuracy_sd;
  j["confusion"] = to_json(r.confusion);
  j["accuracy_ci95"] = json{{"lower", r.accuracy_ci.lower}, {"upper", r.accuracy_ci.upper}};
  j["rules"] = json::array();
  for (const auto& rule : r.rules) j["rules"].push_back(to_json(rule));
  j["two_feature"] = r.two_feature ? json::array({to_json(r.two_feature->clauses[0]),
                                                   to_json(r.two_feature->clauses[1])})
                                   : json(nullptr);
  j["folds"] = json::array();
  for (const auto& f : r.folds) {
    j["folds"].push_back(json{{"fold", f.fold},
                              {"rule", to_json(f.rule)},
                              {"inner_score", f.inner_score},
                              {"train_size", f.train_size},
                              {"test_size", f.test_size},
                              {"confusion", to_json(f.confusion)},
                              {"accuracy", f.confusion.accuracy()}});
  }
  j["selected_configs"] = json::array();
  for (const auto& c : r.selected_configs) {
    j["selected_configs"].push_back(json{{"feature", to_json(c.feature)}, {"count", c.count}});
  }
  j["robustness"] = json::array();
  for (const auto& p : r.robustness) {
    j["robustness"].push_back(
        json{{"multiplier", p.multiplier}, {"threshold", p.threshold}, {"accuracy", p.accuracy}});
  }
  j["learning_curve"] = json::array();
  for (const auto& p : r.learning_curve) {
    j["learning_curve"].push_back(json{{"size", p.size},
                                       {"mean_accuracy", p.mean_accuracy},
                                       {"sd_accuracy", p.sd_accuracy},
                                       {"repeats", p.repeats}});
  }
  j["recalibrated_accuracy"] = r.recalibrated_accuracy ? json(*r.recalibrated_accuracy) : json(nullptr);
  j["validation_accuracy"] = r.validation_accuracy ? json(*r.validation_accuracy) : json(nullptr);
  return j;
}

EvalReport eval_from_json(const json& j) {
  EvalReport r;
  r.protocol = j.at("protocol").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.objective = parse_objective(j.at("objective").get<std::string>());
  r.accuracy = j.at("accuracy").get<double>();
  r.accuracy_sd = j.at("accuracy_sd").get<double>();
  r.confusion = confusion_from_json(j.at("confusion"));
  r.accuracy_ci = {j.at("accuracy_ci95").at("lower").get<double>(),
                   j.at("accuracy_ci95").at("upper").get<double>()};
  for (const auto& rule : j.at("rules")) r.rules.push_back(rule_from_json(rule));
  if (!j.at("two_feature").is_null()) {
    const auto& t = j.at("two_feature");
    r.two_feature = TwoFeatureRule{{rule_from_json(t.at(0)), rule_from_json(t.at(1))}};
  }
  for (const auto& f : j.at("folds")) {
    FoldTrace t;
    t.fold = f.at("fold").get<std::size_t>();
    t.rule = rule_from_json(f.at("rule"));
    t.inner_score = f.at("inner_score").get<double>();
    t.train_size = f.at("train_size").get<std::size_t>();
    t.test_size = f.at("test_size").get<std::size_t>();
    t.confusion = confusion_from_json(f.at("confusion"));
    r.folds.push_back(std::move(t));
  }
  for (const auto& c : j.at("selected_configs")) {
    r.selected_configs.push_back({key_from_json(c.at("feature")), c.at("count").get<std::size_t>()});
  }
  for (const auto& p : j.at("robustness")) {
    r.robustness.push_back({p.at("multiplier").get<double>(), p.at("threshold").get<double>(),
                            p.at("accuracy").get<double>()});
  }
  for (const auto& p : j.at("learning_curve")) {
    r.learning_curve.push_back({p.at("size").get<std::size_t>(), p.at("mean_accuracy").get<double>(),
                                p.at("sd_accuracy").get<double>(), p.at("repeats").get<std::size_t>()});
  }
  if (!j.at("recalibrated_accuracy").is_null()) {
    r.recalibrated_accuracy = j.at("recalibrated_accuracy").get<double>();
  }
  if (!j.at("validation_accuracy").is_null()) {
    r.validation_accuracy = j.at("validation_accuracy").get<double>();
  }
  return r;
}

std::string format_scan_csv(std::span<const ScanRow> rows) {
  std::string out(kScanHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.metric, r.layer, r.cohens_d, r.p_mw, r.p_t,
                       r.p_bh, r.valid_mean, r.invalid_mean);
  }
  return out;
}

std::vector<ScanRow> read_scan_csv(const fs::path& path) {
  std::istringstream in(fileutil::read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != kScanHeader) {
    fail(ErrorKind::MalformedHeader, fmt::format("'{}' lacks the scan header", path.string()));
  }
  std::vector<ScanRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1)) {
      f.push_back(rest.substr(0, pos));
    }
    f.push_back(rest);
    if (f.size() != 8) {
      fail(ErrorKind::MalformedHeader,
           fmt::format("{}:{}: expected 8 fields, got {}", path.string(), line_no, f.size()));
    }
    ScanRow r;
    r.metric = std::string(f[0]);
    r.layer = parse_field<int>(f[1], path, line_no);
    r.cohens_d = parse_field<double>(f[2], path, line_no);
    r.p_mw = parse_field<double>(f[3], path, line_no);
    r.p_t = parse_field<double>(f[4], path, line_no);
    r.p_bh = parse_field<double>(f[5], path, line_no);
    r.valid_mean = parse_field<double>(f[6], path, line_no);
    r.invalid_mean = parse_field<double>(f[7], path, line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_curve_csv(std::span<const CurvePoint> curve) {
  std::string out = "multiplier,threshold,accuracy\n";
  for (const auto& p : curve) out += fmt::format("{},{},{}\n", p.multiplier, p.threshold, p.accuracy);
  return out;
}

std::string format_learning_csv(std::span<const LearningPoint> curve) {
  std::string out = "size,mean_accuracy,sd_accuracy,repeats\n";
  for (const auto& p : curve) {
    out += fmt::format("{},{},{},{}\n", p.size, p.mean_accuracy, p.sd_accuracy, p.repeats);
  }
  return out;
}

void write_results(const ResultBundle& bundle, const fs::path& out_dir) {
  fileutil::ensure_directory(out_dir);
  fileutil::DirectoryLock lock(out_dir);
  json j;
  j["metadata"] = bundle.metadata;
  j["scan"] = json::array();
  for (const auto& row : bundle.scan) j["scan"].push_back(to_json(row));
  j["eval"] = bundle.eval ? to_json(*bundle.eval) : json(nullptr);

  static const std::vector<CurvePoint> no_curve;
  static const std::vector<LearningPoint> no_learning;
  const auto& curve = bundle.eval ? bundle.eval->robustness : no_curve;
  const auto& learning = bundle.eval ? bundle.eval->learning_curve : no_learning;
  fileutil::write_atomic(out_dir / "scan.csv", format_scan_csv(bundle.scan));
  fileutil::write_atomic(out_dir / "curve.csv", format_curve_csv(curve));
  fileutil::write_atomic(out_dir / "learning_curve.csv", format_learning_csv(learning));
  fileutil::write_atomic(out_dir / "report.json", j.dump(2) + "\n");
}

ResultBundle read_results(const fs::path& out_dir) {
  json j;
  try {
    j = json::parse(fileutil::read_text(out_dir / "report.json"));
  } catch (const json::exception& e) {
    fail(ErrorKind::MalformedHeader, fmt::format("report.json in '{}': {}", out_dir.string(), e.what()));
  }
  ResultBundle b;
  try {
    b.metadata = j.at("metadata");
    for (const auto& row : j.at("scan")) b.scan.push_back(scan_row_from_json(row));
    if (!j.at("eval").is_null()) b.eval = eval_from_json(j.at("eval"));
  } catch (const json::exception& e) {
    fail(ErrorKind::MalformedHeader, fmt::format("report.json in '{}': {}", out_dir.string(), e.what()));
  }
  return b;
}

}  // namespace attn_spectra

#include "attn_spectra/feature_table.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include <fmt/format.h>

#include "attn_spectra/error.hpp"
#include "attn_spectra/fileutil.hpp"

namespace fs = std::filesystem;

namespace attn_spectra {

namespace {

constexpr std::string_view kDiagnosticsHeader = "sample_id,layer,metric,value";

std::size_t metric_rank(std::string_view metric) {
  auto it = std::find(metric::all.begin(), metric::all.end(), metric);
  return static_cast<std::size_t>(it - metric::all.begin());
}

bool feature_order(const FeatureKey& a, const FeatureKey& b) {
  const auto ra = metric_rank(a.metric), rb = metric_rank(b.metric);
  if (ra != rb) return ra < rb;
  if (a.metric != b.metric) return a.metric < b.metric;
  return a.layer < b.layer;
}

// Quotes a field when it holds a delimiter, quote or line break.
std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// Quoted fields may contain commas, doubled quotes and line breaks.
std::vector<CsvRecord> parse_csv(std::string_view text, const fs::path& path) {
  std::vector<CsvRecord> records;
  CsvRecord current{{std::string()}, 1};
  std::size_t line = 1;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        current.fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        if (c == '\n') ++line;
        current.fields.back() += c;
      }
      continue;
    }
    if (c == '"' && current.fields.back().empty()) {
      quoted = any = true;
    } else if (c == ',') {
      current.fields.emplace_back();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !current.fields.back().empty()) records.push_back(std::move(current));
      current = CsvRecord{{std::string()}, ++line};
      any = false;
    } else {
      current.fields.back() += c;
      any = true;
    }
  }
  if (quoted) fail(ErrorKind::MalformedHeader, fmt::format("{}: unterminated quoted field", path.string()));
  if (any || !current.fields.back().empty()) records.push_back(std::move(current));
  return records;
}

template <typename T>
T parse_number(std::string_view text, const fs::path& path, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorKind::MalformedHeader,
         fmt::format("{}:{}: cannot parse number '{}'", path.string(), line_no, text));
  }
  return value;
}

}  // namespace

std::string format_diagnostics_csv(std::span<const DiagnosticRow> rows) {
  std::string out(kDiagnosticsHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{}\n", csv_field(r.sample_id), r.layer, csv_field(r.metric), r.value);
  }
  return out;
}

void write_diagnostics_csv(const fs::path& path, std::span<const DiagnosticRow> rows) {
  fileutil::write_atomic(path, format_diagnostics_csv(rows));
}

std::vector<DiagnosticRow> read_diagnostics_csv(const fs::path& path) {
  const auto records = parse_csv(fileutil::read_text(path), path);
  if (records.empty() || records.front().fields != std::vector<std::string>{"sample_id", "layer", "metric", "value"}) {
    fail(ErrorKind::MalformedHeader, fmt::format("'{}' lacks the diagnostics header", path.string()));
  }
  std::vector<DiagnosticRow> rows;
  rows.reserve(records.size() - 1);
  for (std::size_t k = 1; k < records.size(); ++k) {
    const auto& [fields, line_no] = records[k];
    if (fields.size() != 4) {
      fail(ErrorKind::MalformedHeader,
           fmt::format("{}:{}: expected 4 fields, got {}", path.string(), line_no, fields.size()));
    }
    rows.push_back({fields[0], parse_number<int>(fields[1], path, line_no), fields[2],
                    parse_number<double>(fields[3], path, line_no)});
  }
  return rows;
}

FeatureTable::FeatureTable(std::vector<std::string> ids, std::vector<Label> labels,
                           std::vector<FeatureKey> features, std::vector<std::vector<double>> columns)
    : ids_(std::move(ids)),
      labels_(std::move(labels)),
      features_(std::move(features)),
      columns_(std::move(columns)) {
  if (labels_.size() != ids_.size() || columns_.size() != features_.size()) {
    fail(ErrorKind::DimMismatch, "feature table: ids/labels or features/columns disagree in size");
  }
  for (const auto& c : columns_) {
    if (c.size() != ids_.size()) fail(ErrorKind::DimMismatch, "feature table: ragged column");
  }
}

FeatureTable FeatureTable::from_rows(std::span<const DiagnosticRow> rows,
                                     const CorpusManifest& corpus,
                                     std::vector<std::string>* dropped) {
  std::map<std::string, std::map<FeatureKey, double>> by_sample;
  std::set<FeatureKey> keys;
  for (const auto& r : rows) {
    FeatureKey key{r.metric, r.layer};
    by_sample[r.sample_id][key] = r.value;
    keys.insert(key);
  }
  std::vector<FeatureKey> features(keys.begin(), keys.end());
  std::sort(features.begin(), features.end(), feature_order);

  std::vector<std::string> ids;
  std::vector<Label> labels;
  std::vector<std::vector<double>> columns(features.size());
  std::set<std::string> used;
  for (const auto& entry : corpus.entries) {
    auto it = by_sample.find(entry.id);
    if (it == by_sample.end()) continue;
    used.insert(entry.id);
    if (entry.label == Label::unlabeled || it->second.size() != features.size()) {
      if (dropped) dropped->push_back(entry.id);
      continue;
    }
    ids.push_back(entry.id);
    labels.push_back(entry.label);
    for (std::size_t f = 0; f < features.size(); ++f) columns[f].push_back(it->second.at(features[f]));
  }
  if (dropped) {
    for (const auto& [id, _] : by_sample) {
      if (!used.contains(id)) dropped->push_back(id);
    }
  }
  return FeatureTable(std::move(ids), std::move(labels), std::move(features), std::move(columns));
}

std::optional<std::size_t> FeatureTable::feature_index(const FeatureKey& key) const {
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (features_[f] == key) return f;
  }
  return std::nullopt;
}

std::size_t FeatureTable::require_feature(const FeatureKey& key) const {
  if (auto f = feature_index(key)) return *f;
  fail(ErrorKind::MissingFeature, fmt::format("feature {} not present", to_string(key)));
}

std::vector<int> FeatureTable::layers_of(std::string_view metric) const {
  std::set<int> layers;
  for (const auto& k : features_) {
    if (k.metric == metric) layers.insert(k.layer);
  }
  return {layers.begin(), layers.end()};
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<Label> labels;
  std::vector<std::vector<double>> columns(features_.size());
  for (auto r : rows) {
    ids.push_back(ids_.at(r));
    labels.push_back(labels_.at(r));
    for (std::size_t f = 0; f < features_.size(); ++f) columns[f].push_back(columns_[f][r]);
  }
  return FeatureTable(std::move(ids), std::move(labels), features_, std::move(columns));
}

FeatureTable FeatureTable::select_metrics(std::span<const std::string> metrics) const {
  std::vector<FeatureKey> features;
  std::vector<std::vector<double>> columns;
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (std::find(metrics.begin(), metrics.end(), features_[f].metric) != metrics.end()) {
      features.push_back(features_[f]);
      columns.push_back(columns_[f]);
    }
  }
  return FeatureTable(ids_, labels_, std::move(features), std::move(columns));
}

std::size_t FeatureTable::count(Label label) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

std::vector<DiagnosticRow> FeatureTable::to_rows() const {
  // Same ordering as the analyze driver: sample, then layer, then metric.
  std::vector<std::size_t> order(features_.size());
  for (std::size_t f = 0; f < order.size(); ++f) order[f] = f;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (features_[a].layer != features_[b].layer) return features_[a].layer < features_[b].layer;
    return feature_order(features_[a], features_[b]);
  });
  std::vector<DiagnosticRow> rows;
  rows.reserve(size() * feature_count());
  for (std::size_t i = 0; i < size(); ++i) {
    for (auto f : order) {
      rows.push_back({ids_[i], features_[f].layer, features_[f].metric, columns_[f][i]});
    }
  }
  return rows;
}

}  // namespace attn_spectra

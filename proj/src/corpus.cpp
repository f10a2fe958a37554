#include "attn_spectra/corpus.hpp"

#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "attn_spectra/error.hpp"
#include "attn_spectra/fileutil.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace attn_spectra {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

namespace {

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  fail(ErrorKind::MalformedHeader, fmt::format("unknown split '{}'", text));
}

}  // namespace

const CorpusEntry* CorpusManifest::find(std::string_view id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

CorpusManifest load_corpus(const fs::path& manifest_path) {
  const auto base = manifest_path.parent_path();
  CorpusManifest manifest;
  try {
    const auto doc = json::parse(fileutil::read_text(manifest_path));
    for (const auto& item : doc.at("entries")) {
      CorpusEntry entry;
      entry.id = item.at("id").get<std::string>();
      if (auto it = item.find("archive"); it != item.end() && !it->is_null()) {
        fs::path p = it->get<std::string>();
        entry.archive = p.is_absolute() ? p : base / p;
      }
      entry.label = parse_label(item.value("label", std::string("unlabeled")));
      entry.groups = item.value("groups", std::vector<std::string>{});
      if (auto it = item.find("split"); it != item.end() && !it->is_null()) {
        entry.split = parse_split(it->get<std::string>());
      }
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::MalformedHeader, fmt::format("'{}': {}", manifest_path.string(), e.what()));
  }

  std::set<std::string> seen;
  for (const auto& e : manifest.entries) {
    if (!seen.insert(e.id).second) fail(ErrorKind::DuplicateSampleId, e.id);
  }
  std::vector<std::string> missing;
  for (const auto& e : manifest.entries) {
    if (!e.archive.empty() && !fs::exists(e.archive)) missing.push_back(e.archive.string());
  }
  if (!missing.empty()) {
    fail(ErrorKind::MissingArchive,
         fmt::format("{} archive(s) not found: {}", missing.size(), fmt::join(missing, ", ")));
  }
  return manifest;
}

void write_corpus(const CorpusManifest& manifest, const fs::path& manifest_path) {
  const auto base = manifest_path.parent_path();
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json item{{"id", e.id}, {"label", std::string(to_string(e.label))}, {"groups", e.groups}};
    if (e.archive.empty()) {
      item["archive"] = nullptr;
    } else {
      auto rel = e.archive.lexically_relative(base.empty() ? fs::path(".") : base);
      item["archive"] = (rel.empty() || *rel.begin() == "..") ? e.archive.string() : rel.string();
    }
    item["split"] = e.split ? json(std::string(to_string(*e.split))) : json(nullptr);
    entries.push_back(std::move(item));
  }
  if (!base.empty()) fileutil::ensure_directory(base);
  fileutil::write_atomic(manifest_path, json{{"entries", entries}}.dump(2) + "\n");
}

}  // namespace attn_spectra

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "attn_spectra/types.hpp"

namespace attn_spectra {

enum class Split { train, val, test };

std::string_view to_string(Split split);

struct CorpusEntry {
  std::string id;
  // Resolved against the manifest's directory. Empty for label-only entries
  // (planted feature tables carry no archives).
  std::filesystem::path archive;
  Label label = Label::unlabeled;
  std::vector<std::string> groups;
  std::optional<Split> split;

  bool operator==(const CorpusEntry&) const = default;
};

struct CorpusManifest {
  std::vector<CorpusEntry> entries;

  const CorpusEntry* find(std::string_view id) const;
  bool operator==(const CorpusManifest&) const = default;
};

/// Parses a UTF-8 JSON manifest of the form
///   {"entries": [{"id": "p1", "archive": "p1", "label": "valid",
///                 "groups": ["amc"], "split": "train"}, ...]}
/// Archive paths are relative to the manifest file. Duplicate ids raise
/// DuplicateSampleId; every absent archive is collected into one
/// MissingArchive error.
CorpusManifest load_corpus(const std::filesystem::path& manifest_path);

/// Writes `manifest` with archive paths made relative to the manifest's
/// directory where possible.
void write_corpus(const CorpusManifest& manifest, const std::filesystem::path& manifest_path);

}  // namespace attn_spectra

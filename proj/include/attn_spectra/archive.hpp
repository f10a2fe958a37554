#pragma once

// On-disk sample archives.
//
// One directory per sample:
//
//   <sample>/meta.json        UTF-8 header: manifest fields plus an "arrays" list
//   <sample>/attn/<l>.bin     float32 [H, N, N], row-major, little-endian
//   <sample>/hidden/<l>.bin   float32 [N, d],    row-major, little-endian
//
// Only binary32 is accepted on disk. Everything downstream promotes to double.

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "attn_spectra/types.hpp"

namespace attn_spectra {

inline constexpr double kRowSumTolerance = 1e-3;

struct ArchiveManifest {
  std::string sample_id;
  Label label = Label::unlabeled;
  std::string source;
  std::size_t tokens = 0;        // N
  std::size_t layers = 0;        // L
  std::size_t heads = 0;         // H
  std::size_t hidden_width = 0;  // d
  // Sliding-window rows may renormalize over a truncated window; disables
  // the row-sum check.
  bool sparse_attention = false;
  // Extractor settings echoed verbatim for provenance.
  std::string extractor_mode = "inference";
  std::string hidden_stream = "post-block";
  std::string model;

  bool operator==(const ArchiveManifest&) const = default;
};

struct TensorArray {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  std::size_t element_count() const;
  bool operator==(const TensorArray&) const = default;
};

std::string attention_array_name(std::size_t layer);  // "attn/<l>"
std::string hidden_array_name(std::size_t layer);     // "hidden/<l>"

/// A validated sample. Construction either checks every invariant or throws;
/// there is no partially built archive.
class TensorArchive {
 public:
  /// Validates shapes, finiteness, nonnegativity and (unless the manifest
  /// flags sparse attention) row-stochasticity of every attention row.
  static TensorArchive create(ArchiveManifest manifest, std::map<std::string, TensorArray> arrays);

  const ArchiveManifest& manifest() const { return manifest_; }
  const std::map<std::string, TensorArray>& arrays() const { return arrays_; }

  std::size_t tokens() const { return manifest_.tokens; }
  std::size_t layers() const { return manifest_.layers; }
  std::size_t heads() const { return manifest_.heads; }
  std::size_t hidden_width() const { return manifest_.hidden_width; }

  /// Row-major N×N slice of head `head` at `layer`.
  std::span<const float> attention(std::size_t layer, std::size_t head) const;
  /// Row-major N×d block output of `layer`.
  std::span<const float> hidden(std::size_t layer) const;

 private:
  TensorArchive() = default;

  ArchiveManifest manifest_;
  std::map<std::string, TensorArray> arrays_;
};

TensorArchive load_archive(const std::filesystem::path& dir);
void write_archive(const TensorArchive& archive, const std::filesystem::path& dir);

}  // namespace attn_spectra

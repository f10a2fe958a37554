#include "attn_spectra/archive.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "attn_spectra/error.hpp"
#include "attn_spectra/fileutil.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace attn_spectra {

namespace {

constexpr int kFormatVersion = 1;

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_shape(const std::map<std::string, TensorArray>& arrays, const std::string& name,
                   const std::vector<std::size_t>& expected) {
  auto it = arrays.find(name);
  if (it == arrays.end()) fail(ErrorKind::MalformedHeader, fmt::format("missing array '{}'", name));
  if (it->second.shape != expected) {
    fail(ErrorKind::ShapeMismatch, fmt::format("array '{}' has shape [{}], expected [{}]", name,
                                               fmt::join(it->second.shape, ","),
                                               fmt::join(expected, ",")));
  }
}

std::vector<float> decode_le_f32(const std::string& bytes) {
  std::vector<float> out(bytes.size() / 4);
  std::memcpy(out.data(), bytes.data(), out.size() * 4);
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : out) {
      auto u = std::bit_cast<std::uint32_t>(v);
      u = ((u & 0xffu) << 24) | ((u & 0xff00u) << 8) | ((u >> 8) & 0xff00u) | (u >> 24);
      v = std::bit_cast<float>(u);
    }
  }
  return out;
}

std::string encode_le_f32(const std::vector<float>& data) {
  std::string bytes(data.size() * 4, '\0');
  std::memcpy(bytes.data(), data.data(), bytes.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < bytes.size(); i += 4) {
      std::swap(bytes[i], bytes[i + 3]);
      std::swap(bytes[i + 1], bytes[i + 2]);
    }
  }
  return bytes;
}

json manifest_to_json(const ArchiveManifest& m) {
  return json{{"format_version", kFormatVersion},
              {"sample_id", m.sample_id},
              {"label", std::string(to_string(m.label))},
              {"source", m.source},
              {"tokens", m.tokens},
              {"layers", m.layers},
              {"heads", m.heads},
              {"hidden_width", m.hidden_width},
              {"sparse_attention", m.sparse_attention},
              {"extractor_mode", m.extractor_mode},
              {"hidden_stream", m.hidden_stream},
              {"model", m.model}};
}

ArchiveManifest manifest_from_json(const json& j) {
  ArchiveManifest m;
  m.sample_id = j.at("sample_id").get<std::string>();
  m.label = parse_label(j.value("label", std::string("unlabeled")));
  m.source = j.value("source", std::string());
  m.tokens = j.at("tokens").get<std::size_t>();
  m.layers = j.at("layers").get<std::size_t>();
  m.heads = j.at("heads").get<std::size_t>();
  m.hidden_width = j.at("hidden_width").get<std::size_t>();
  m.sparse_attention = j.value("sparse_attention", false);
  m.extractor_mode = j.value("extractor_mode", std::string("inference"));
  m.hidden_stream = j.value("hidden_stream", std::string("post-block"));
  m.model = j.value("model", std::string());
  return m;
}

}  // namespace

std::size_t TensorArray::element_count() const { return shape_product(shape); }

std::string attention_array_name(std::size_t layer) { return fmt::format("attn/{}", layer); }
std::string hidden_array_name(std::size_t layer) { return fmt::format("hidden/{}", layer); }

TensorArchive TensorArchive::create(ArchiveManifest manifest,
                                    std::map<std::string, TensorArray> arrays) {
  const auto n = manifest.tokens;
  const auto layers = manifest.layers;
  const auto heads = manifest.heads;
  const auto width = manifest.hidden_width;
  if (manifest.sample_id.empty()) fail(ErrorKind::MalformedHeader, "empty sample id");
  if (n == 0 || layers == 0 || heads == 0 || width == 0) {
    fail(ErrorKind::MalformedHeader,
         fmt::format("sample '{}': dimensions must be positive (N={}, L={}, H={}, d={})",
                     manifest.sample_id, n, layers, heads, width));
  }

  for (const auto& [name, array] : arrays) {
    if (array.element_count() != array.data.size()) {
      fail(ErrorKind::ShapeMismatch,
           fmt::format("array '{}' declares shape [{}] ({} floats) but holds {} floats", name,
                       fmt::join(array.shape, ","), array.element_count(), array.data.size()));
    }
    for (std::size_t i = 0; i < array.data.size(); ++i) {
      if (!std::isfinite(array.data[i])) {
        fail(ErrorKind::NonFiniteTensor,
             fmt::format("array '{}' has a non-finite entry at flat index {}", name, i));
      }
    }
  }

  for (std::size_t l = 0; l < layers; ++l) {
    require_shape(arrays, attention_array_name(l), {heads, n, n});
    require_shape(arrays, hidden_array_name(l), {n, width});
  }

  struct WorstRow {
    double deviation = -1.0;
    double sum = 0.0;
    std::size_t layer = 0, head = 0, row = 0;
  } worst;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& data = arrays.at(attention_array_name(l)).data;
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        const float* row = data.data() + (h * n + i) * n;
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (row[j] < 0.0f) {
            fail(ErrorKind::NegativeWeight,
                 fmt::format("array 'attn/{}' head {} row {} col {} is negative ({})", l, h, i, j,
                             row[j]));
          }
          sum += row[j];
        }
        const double deviation = std::abs(sum - 1.0);
        if (deviation > worst.deviation) worst = {deviation, sum, l, h, i};
      }
    }
  }
  if (!manifest.sparse_attention && worst.deviation > kRowSumTolerance) {
    fail(ErrorKind::RowSumViolation,
         fmt::format("sample '{}': worst attention row is layer {} head {} row {} with sum {:.6g}",
                     manifest.sample_id, worst.layer, worst.head, worst.row, worst.sum));
  }

  TensorArchive archive;
  archive.manifest_ = std::move(manifest);
  archive.arrays_ = std::move(arrays);
  return archive;
}

std::span<const float> TensorArchive::attention(std::size_t layer, std::size_t head) const {
  const auto& data = arrays_.at(attention_array_name(layer)).data;
  const auto nn = tokens() * tokens();
  return std::span<const float>(data).subspan(head * nn, nn);
}

std::span<const float> TensorArchive::hidden(std::size_t layer) const {
  return arrays_.at(hidden_array_name(layer)).data;
}

TensorArchive load_archive(const fs::path& dir) {
  const auto meta_path = dir / "meta.json";
  if (!fs::is_regular_file(meta_path)) {
    fail(ErrorKind::MalformedHeader, fmt::format("no meta.json in '{}'", dir.string()));
  }
  json meta;
  ArchiveManifest manifest;
  std::map<std::string, TensorArray> arrays;
  try {
    meta = json::parse(fileutil::read_text(meta_path));
    manifest = manifest_from_json(meta);
    for (const auto& entry : meta.at("arrays")) {
      const auto name = entry.at("name").get<std::string>();
      const auto dtype = entry.value("dtype", std::string("float32"));
      if (dtype != "float32" && dtype != "<f4") {
        fail(ErrorKind::MalformedHeader,
             fmt::format("array '{}' has dtype '{}'; only float32 is accepted", name, dtype));
      }
      TensorArray array;
      array.shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto file = entry.value("file", name + ".bin");
      const fs::path rel(file);
      if (rel.is_absolute() || file.find("..") != std::string::npos) {
        fail(ErrorKind::MalformedHeader,
             fmt::format("array '{}' payload path '{}' escapes the archive", name, file));
      }
      const auto path = dir / rel;
      if (!fs::is_regular_file(path)) {
        fail(ErrorKind::MalformedHeader, fmt::format("array '{}' payload '{}' is missing", name,
                                                     path.string()));
      }
      const auto bytes = fileutil::read_text(path);
      if (bytes.size() % 4 != 0) {
        fail(ErrorKind::ShapeMismatch,
             fmt::format("array '{}' payload is {} bytes, not a whole number of float32", name,
                         bytes.size()));
      }
      array.data = decode_le_f32(bytes);
      if (!arrays.emplace(name, std::move(array)).second) {
        fail(ErrorKind::MalformedHeader, fmt::format("array '{}' listed twice", name));
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::MalformedHeader, fmt::format("'{}': {}", meta_path.string(), e.what()));
  }
  return TensorArchive::create(std::move(manifest), std::move(arrays));
}

void write_archive(const TensorArchive& archive, const fs::path& dir) {
  fileutil::ensure_directory(dir);
  fileutil::DirectoryLock lock(dir);
  json meta = manifest_to_json(archive.manifest());
  json listing = json::array();
  for (const auto& [name, array] : archive.arrays()) {
    const auto file = name + ".bin";
    const auto path = dir / file;
    fileutil::ensure_directory(path.parent_path());
    const auto bytes = encode_le_f32(array.data);
    fileutil::write_atomic(path, std::span<const char>(bytes.data(), bytes.size()));
    listing.push_back({{"name", name}, {"shape", array.shape}, {"dtype", "float32"}, {"file", file}});
  }
  meta["arrays"] = std::move(listing);
  fileutil::write_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

}  // namespace attn_spectra

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace attn_spectra {

enum class Label : std::uint8_t { valid, invalid, unlabeled };

std::string_view to_string(Label label);
/// Throws Error(MalformedHeader) on anything other than valid|invalid|unlabeled.
Label parse_label(std::string_view text);

// Metric identifiers as they appear in diagnostics.csv and reports.
namespace metric {
inline constexpr std::string_view fiedler = "fiedler";
inline constexpr std::string_view hfer = "hfer";
inline constexpr std::string_view energy = "energy";
inline constexpr std::string_view entropy = "entropy";
inline constexpr std::string_view smoothness = "smoothness";
inline constexpr std::string_view base_entropy = "base_entropy";
inline constexpr std::string_view base_gini = "base_gini";
inline constexpr std::string_view base_maxconc = "base_maxconc";

inline constexpr std::array<std::string_view, 5> spectral = {fiedler, hfer, energy, entropy,
                                                             smoothness};
inline constexpr std::array<std::string_view, 3> baseline = {base_entropy, base_gini,
                                                             base_maxconc};
/// Emission order used for every per-layer table.
inline constexpr std::array<std::string_view, 8> all = {
    fiedler, hfer, energy, entropy, smoothness, base_entropy, base_gini, base_maxconc};
}  // namespace metric

/// One column of a feature table: a metric observed at a layer.
struct FeatureKey {
  std::string metric;
  int layer = 0;

  auto operator<=>(const FeatureKey&) const = default;
};

std::string to_string(const FeatureKey& key);  // "hfer@L5"

}  // namespace attn_spectra

#include "attn_spectra/types.hpp"

#include <fmt/format.h>

#include "attn_spectra/error.hpp"

namespace attn_spectra {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::valid: return "valid";
    case Label::invalid: return "invalid";
    case Label::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

Label parse_label(std::string_view text) {
  if (text == "valid") return Label::valid;
  if (text == "invalid") return Label::invalid;
  if (text == "unlabeled" || text.empty()) return Label::unlabeled;
  fail(ErrorKind::MalformedHeader, fmt::format("unknown label '{}'", text));
}

std::string to_string(const FeatureKey& key) { return fmt::format("{}@L{}", key.metric, key.layer); }

}  // namespace attn_spectra

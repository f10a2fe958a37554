#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace attn_spectra {

enum class ErrorKind {
  // tensor-io
  MalformedHeader,
  ShapeMismatch,
  NonFiniteTensor,
  RowSumViolation,
  DuplicateSampleId,
  MissingArchive,
  IoFailure,
  // attention-graph
  NonSquare,
  EmptyHeadList,
  MassAllZero,
  NegativeWeight,
  NotSymmetric,
  // spectral-diagnostics
  ConvergenceFailure,
  NotPositiveSemidefinite,
  DimMismatch,
  ZeroSignal,
  TooFewTokens,
  DegenerateGraph,
  // stats
  ZeroVariance,
  TooFewSamples,
  EmptyGroup,
  SingleClassCorpus,
  // classifier
  SingleClass,
  MissingFeature,
  TooSmall,
  LeakageDetected,
  // synthlab / cli
  BadSize,
  BadSpec,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the toolkit. `kind()` is stable and meant for
/// programmatic dispatch; `what()` carries the human-readable context.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace attn_spectra

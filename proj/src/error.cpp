#include "attn_spectra/error.hpp"

namespace attn_spectra {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteTensor: return "NonFiniteTensor";
    case ErrorKind::RowSumViolation: return "RowSumViolation";
    case ErrorKind::DuplicateSampleId: return "DuplicateSampleId";
    case ErrorKind::MissingArchive: return "MissingArchive";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::NonSquare: return "NonSquare";
    case ErrorKind::EmptyHeadList: return "EmptyHeadList";
    case ErrorKind::MassAllZero: return "MassAllZero";
    case ErrorKind::NegativeWeight: return "NegativeWeight";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::ZeroSignal: return "ZeroSignal";
    case ErrorKind::TooFewTokens: return "TooFewTokens";
    case ErrorKind::DegenerateGraph: return "DegenerateGraph";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::EmptyGroup: return "EmptyGroup";
    case ErrorKind::SingleClassCorpus: return "SingleClassCorpus";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::MissingFeature: return "MissingFeature";
    case ErrorKind::TooSmall: return "TooSmall";
    case ErrorKind::LeakageDetected: return "LeakageDetected";
    case ErrorKind::BadSize: return "BadSize";
    case ErrorKind::BadSpec: return "BadSpec";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace attn_spectra

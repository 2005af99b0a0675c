#include "rfm/error.hpp"

namespace rfm {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidImage: return "invalid-image";
    case ErrorCategory::kContractViolation: return "contract-violation";
    case ErrorCategory::kBatchShape: return "batch-shape";
    case ErrorCategory::kGradientUnavailable: return "gradient-unavailable";
    case ErrorCategory::kUnsupportedArchitecture: return "unsupported-architecture";
    case ErrorCategory::kTrainingDiverged: return "training-diverged";
    case ErrorCategory::kChecksum: return "checksum";
    case ErrorCategory::kEmptyAggregate: return "empty-aggregate";
    case ErrorCategory::kDegenerateMap: return "degenerate-map";
    case ErrorCategory::kEmptyDataset: return "empty-dataset";
    case ErrorCategory::kDegenerateLandmarks: return "degenerate-landmarks";
    case ErrorCategory::kUndefinedMetric: return "undefined-metric";
    case ErrorCategory::kUndefinedCoverage: return "undefined-coverage";
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCategory category, const std::string& message)
    : std::runtime_error(message), category_(category) {}

void fail(ErrorCategory category, const std::string& message) { throw Error(category, message); }

}  // namespace rfm

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rfm {

// Every failure raised by the library carries one of these categories. The CLI
// prints the category as the first token of its one-line error message.
enum class ErrorCategory {
  kInvalidImage,
  kContractViolation,
  kBatchShape,
  kGradientUnavailable,
  kUnsupportedArchitecture,
  kTrainingDiverged,
  kChecksum,
  kEmptyAggregate,
  kDegenerateMap,
  kEmptyDataset,
  kDegenerateLandmarks,
  kUndefinedMetric,
  kUndefinedCoverage,
  kConfig,
  kIo,
};

std::string_view category_name(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message);

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] void fail(ErrorCategory category, const std::string& message);

inline void require(bool condition, ErrorCategory category, const std::string& message) {
  if (!condition) fail(category, message);
}

}  // namespace rfm

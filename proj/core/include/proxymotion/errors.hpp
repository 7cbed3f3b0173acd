#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace proxymotion {

enum class ErrorKind {
  kSchema,
  kInvariant,
  kEmptyAfterFilter,
  kInsufficientPoints,
  kDegenerateCloud,
  kDegenerateCorrespondences,
  kGroundNotPlanar,
  kNoValidParts,
  kExtentMismatch,
  kMissingKeyBox,
  kUnknownLevel,
  kUnknownLabel,
  kFrameCountMismatch,
  kShapeMismatch,
  kEmptyDataset,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// Every domain failure in the library is reported through this type; callers
// branch on kind() rather than on the message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kSchema: return "SchemaError";
    case ErrorKind::kInvariant: return "InvariantError";
    case ErrorKind::kEmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorKind::kInsufficientPoints: return "InsufficientPoints";
    case ErrorKind::kDegenerateCloud: return "DegenerateCloud";
    case ErrorKind::kDegenerateCorrespondences: return "DegenerateCorrespondences";
    case ErrorKind::kGroundNotPlanar: return "GroundNotPlanar";
    case ErrorKind::kNoValidParts: return "NoValidParts";
    case ErrorKind::kExtentMismatch: return "ExtentMismatch";
    case ErrorKind::kMissingKeyBox: return "MissingKeyBox";
    case ErrorKind::kUnknownLevel: return "UnknownLevel";
    case ErrorKind::kUnknownLabel: return "UnknownLabel";
    case ErrorKind::kFrameCountMismatch: return "FrameCountMismatch";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kIo: return "IoError";
  }
  return "Error";
}

}  // namespace proxymotion

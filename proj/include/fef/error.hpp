#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fef {

enum class ErrorKind {
  EmptyInput,
  DimensionMismatch,
  DecodeFailure,
  IoError,
  ArityError,
  SchemaError,
  RangeError,
  DegenerateBox,
  EmptyRegion,
  NoFaceDetected,
  SerializationError,
  PreconditionError,
  EndpointError,
  MissingTagError,
  LabelParseError,
  NoPairs,
  DomainError,
  DivergentSupport,
  MissingLandmark,
  ZeroRegion,
  TemplateError,
  DegenerateClasses,
  CorpusTooSmall,
  ZeroVector,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this type; kind() is the
// machine-checkable part, what() carries context for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fef

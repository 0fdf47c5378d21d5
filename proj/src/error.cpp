#include "fef/error.hpp"

namespace fef {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DecodeFailure: return "DecodeFailure";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ArityError: return "ArityError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::RangeError: return "RangeError";
    case ErrorKind::DegenerateBox: return "DegenerateBox";
    case ErrorKind::EmptyRegion: return "EmptyRegion";
    case ErrorKind::NoFaceDetected: return "NoFaceDetected";
    case ErrorKind::SerializationError: return "SerializationError";
    case ErrorKind::PreconditionError: return "PreconditionError";
    case ErrorKind::EndpointError: return "EndpointError";
    case ErrorKind::MissingTagError: return "MissingTagError";
    case ErrorKind::LabelParseError: return "LabelParseError";
    case ErrorKind::NoPairs: return "NoPairs";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::DivergentSupport: return "DivergentSupport";
    case ErrorKind::MissingLandmark: return "MissingLandmark";
    case ErrorKind::ZeroRegion: return "ZeroRegion";
    case ErrorKind::TemplateError: return "TemplateError";
    case ErrorKind::DegenerateClasses: return "DegenerateClasses";
    case ErrorKind::CorpusTooSmall: return "CorpusTooSmall";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind) {}

}  // namespace fef

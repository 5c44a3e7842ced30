#include "layercut/error.hpp"

namespace layercut {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InconsistentN: return "InconsistentN";
    case ErrorCode::InvalidSet: return "InvalidSet";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DegenerateRepresentation: return "DegenerateRepresentation";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::ZeroNormRow: return "ZeroNormRow";
    case ErrorCode::BlockTooSmall: return "BlockTooSmall";
    case ErrorCode::CutoffOutOfRange: return "CutoffOutOfRange";
    case ErrorCode::TooFewLayers: return "TooFewLayers";
    case ErrorCode::SizeExceedsN: return "SizeExceedsN";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

}  // namespace layercut

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace layercut {

enum class ErrorCode {
  // activation_store
  BadMagic,
  TruncatedFile,
  NonFinite,
  InconsistentN,
  InvalidSet,
  IoFailure,
  ParseError,
  InvalidSpec,
  // similarity_metrics
  InvalidConfig,
  ShapeMismatch,
  DegenerateRepresentation,
  KTooLarge,
  ZeroNormRow,
  // cutoff_selector
  BlockTooSmall,
  CutoffOutOfRange,
  TooFewLayers,
  // sensitivity
  SizeExceedsN,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable ErrorCode. what() is
/// "<CodeName>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace layercut

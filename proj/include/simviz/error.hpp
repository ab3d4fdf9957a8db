#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace simviz {

/// Every failure the library reports carries one of these codes.
enum class Errc {
  // array files
  BadMagic,
  UnsupportedVersion,
  UnsupportedDtype,
  FortranOrderUnsupported,
  HeaderSyntax,
  TruncatedPayload,
  NonFiniteElement,
  InvalidArray,
  // manifests
  ManifestSyntax,
  DuplicateId,
  MissingFile,
  ShapeMismatch,
  // images
  UnsupportedImageFormat,
  CorruptImage,
  ImageTooSmall,
  // similarity math
  InvalidTensor,
  InvalidRegion,
  ZeroNormEmbedding,
  DimensionMismatch,
  PoolingInconsistent,
  ZeroSimilarity,
  EmptyClass,
  // retrieval
  UnknownId,
  SingletonClass,
  IndexFormat,
  // generic
  InvalidArgument,
  Io,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace simviz

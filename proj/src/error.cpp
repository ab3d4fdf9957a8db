#include "simviz/error.hpp"

namespace simviz {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::UnsupportedDtype: return "UnsupportedDtype";
    case Errc::FortranOrderUnsupported: return "FortranOrderUnsupported";
    case Errc::HeaderSyntax: return "HeaderSyntax";
    case Errc::TruncatedPayload: return "TruncatedPayload";
    case Errc::NonFiniteElement: return "NonFiniteElement";
    case Errc::InvalidArray: return "InvalidArray";
    case Errc::ManifestSyntax: return "ManifestSyntax";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::MissingFile: return "MissingFile";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::UnsupportedImageFormat: return "UnsupportedImageFormat";
    case Errc::CorruptImage: return "CorruptImage";
    case Errc::ImageTooSmall: return "ImageTooSmall";
    case Errc::InvalidTensor: return "InvalidTensor";
    case Errc::InvalidRegion: return "InvalidRegion";
    case Errc::ZeroNormEmbedding: return "ZeroNormEmbedding";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::PoolingInconsistent: return "PoolingInconsistent";
    case Errc::ZeroSimilarity: return "ZeroSimilarity";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::UnknownId: return "UnknownId";
    case Errc::SingletonClass: return "SingletonClass";
    case Errc::IndexFormat: return "IndexFormat";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

}  // namespace simviz

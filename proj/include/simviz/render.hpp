#pragma once

// Heatmap overlays: bilinear upsampling of a similarity map to image size,
// a fixed blue-green-red colour ramp, and alpha blending.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "simviz/image.hpp"
#include "simviz/simcore.hpp"

namespace simviz::render {

enum class Normalization { PerMap, Shared };
enum class NegativeHandling { ClampToZero, Signed };

struct RenderOptions {
  double alpha = 0.5;
  Normalization normalization = Normalization::PerMap;
  /// Scale used when normalization is Shared: the max |cell| over the result set.
  double shared_scale = 0.0;
  NegativeHandling negative_handling = NegativeHandling::ClampToZero;
};

void validate(const RenderOptions& opts);

struct Field {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;  // row-major

  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

/// Cell centres sit at ((x+0.5)/grid_w, (y+0.5)/grid_h); samples beyond the
/// outermost centres replicate the edge.
Field upsample_bilinear(const SimilarityMap& m, std::size_t out_w, std::size_t out_h);

/// Ramp t=0 -> (0,0,255), t=0.5 -> (0,255,0), t=1 -> (255,0,0).
std::array<std::uint8_t, 3> colormap(double t);

/// Normalized ramp position of every field value, in [0, 1].
std::vector<double> normalize(const Field& field, const RenderOptions& opts);

RasterImage apply_colormap(const Field& field, const RenderOptions& opts);

/// Per channel round-half-up((1-alpha)*base + alpha*heat).
RasterImage blend(const RasterImage& base, const RasterImage& heat, double alpha);

/// Upsample to the base image size, colour, and blend.
RasterImage overlay(const SimilarityMap& m, const RasterImage& base, const RenderOptions& opts);

/// Largest |cell| across the maps; the Shared normalization scale for a result set.
double max_abs(std::span<const SimilarityMap* const> maps);

}  // namespace simviz::render

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace simviz {

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RasterImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  RasterImage() = default;
  RasterImage(std::size_t w, std::size_t h);  // black image

  std::uint8_t* at(std::size_t x, std::size_t y) { return &pixels[3 * (y * width + x)]; }
  const std::uint8_t* at(std::size_t x, std::size_t y) const { return &pixels[3 * (y * width + x)]; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

void validate(const RasterImage& img);

namespace image {

enum class Format { Png, Ppm };

/// Sniffs the format from the leading bytes (PNG signature or "P6").
RasterImage decode(std::span<const std::uint8_t> bytes);

RasterImage decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const RasterImage& img);

/// Accepts 8-bit RGB and RGBA; alpha is dropped without compositing.
RasterImage decode_png(std::span<const std::uint8_t> bytes);
/// 8-bit RGB, non-interlaced, written by libpng's simplified writer with its
/// fixed default filter and zlib settings and no ancillary chunks.
std::vector<std::uint8_t> encode_png(const RasterImage& img);

std::vector<std::uint8_t> encode(const RasterImage& img, Format format);

/// Format picked from the extension: .png or .ppm (case-insensitive).
Format format_for_path(const std::filesystem::path& path);

}  // namespace image

RasterImage read_image(const std::filesystem::path& path);
void write_image(const RasterImage& img, const std::filesystem::path& path);

}  // namespace simviz

#include "simviz/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <string>

#include "simviz/error.hpp"
#include "simviz/io_util.hpp"

namespace simviz {

RasterImage::RasterImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(3 * w * h, 0) {}

void validate(const RasterImage& img) {
  if (img.width == 0 || img.height == 0) throw Error(Errc::InvalidArgument, "image dimensions must be positive");
  if (img.pixels.size() != 3 * img.width * img.height) {
    throw Error(Errc::InvalidArgument, "pixel buffer length does not match 3*width*height");
  }
}

namespace image {
namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Reads one whitespace-delimited decimal token from a PNM header, skipping comments.
std::size_t pnm_number(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (is_space(bytes[pos])) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw Error(Errc::CorruptImage, "malformed PPM header");
  std::size_t v = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
    if (v > (1u << 24)) throw Error(Errc::CorruptImage, "PPM dimension too large");
    ++pos;
  }
  return v;
}

}  // namespace

RasterImage decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= sizeof kPngSignature && std::memcmp(bytes.data(), kPngSignature, sizeof kPngSignature) == 0) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
  throw Error(Errc::UnsupportedImageFormat, "expected PNG or binary PPM (P6)");
}

RasterImage decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw Error(Errc::UnsupportedImageFormat, "not a binary PPM (P6)");
  }
  std::size_t pos = 2;
  const std::size_t w = pnm_number(bytes, pos);
  const std::size_t h = pnm_number(bytes, pos);
  const std::size_t maxval = pnm_number(bytes, pos);
  if (maxval != 255) throw Error(Errc::UnsupportedImageFormat, "PPM maxval must be 255");
  if (w == 0 || h == 0) throw Error(Errc::CorruptImage, "PPM has zero dimension");
  if (pos >= bytes.size() || !is_space(bytes[pos])) throw Error(Errc::CorruptImage, "PPM header not terminated");
  ++pos;
  RasterImage img(w, h);
  if (bytes.size() - pos < img.pixels.size()) throw Error(Errc::CorruptImage, "PPM pixel data truncated");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), img.pixels.size(), img.pixels.begin());
  return img;
}

std::vector<std::uint8_t> encode_ppm(const RasterImage& img) {
  validate(img);
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(Errc::CorruptImage, msg);
  }
  const bool color = png.format & PNG_FORMAT_FLAG_COLOR;
  const bool wide = png.format & PNG_FORMAT_FLAG_LINEAR;
  const bool palette = png.format & PNG_FORMAT_FLAG_COLORMAP;
  if (!color || wide || palette) {
    png_image_free(&png);
    throw Error(Errc::UnsupportedImageFormat, "PNG must be 8-bit RGB or RGBA");
  }

  // Read as RGBA so stored colour values pass through untouched, then drop alpha.
  png.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, rgba.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(Errc::CorruptImage, msg);
  }
  RasterImage img(png.width, png.height);
  for (std::size_t i = 0, n = img.width * img.height; i < n; ++i) {
    std::memcpy(&img.pixels[3 * i], &rgba[4 * i], 3);
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  validate(img);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    throw Error(Errc::Io, std::string("PNG encoding failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw Error(Errc::Io, std::string("PNG encoding failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode(const RasterImage& img, Format format) {
  return format == Format::Png ? encode_png(img) : encode_ppm(img);
}

Format format_for_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return Format::Png;
  if (ext == ".ppm") return Format::Ppm;
  throw Error(Errc::UnsupportedImageFormat, "unsupported image extension '" + ext + "'");
}

}  // namespace image

RasterImage read_image(const std::filesystem::path& path) {
  const auto bytes = io::read_bytes(path);
  try {
    return image::decode(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_image(const RasterImage& img, const std::filesystem::path& path) {
  io::write_bytes(path, image::encode(img, image::format_for_path(path)));
}

}  // namespace simviz

#include "simviz/render.hpp"

#include <algorithm>
#include <cmath>

#include "simviz/error.hpp"

namespace simviz::render {
namespace {

std::uint8_t round_half_up(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

void validate(const RenderOptions& opts) {
  if (!(opts.alpha >= 0.0 && opts.alpha <= 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in [0,1]");
  if (!(opts.shared_scale >= 0.0) || !std::isfinite(opts.shared_scale)) {
    throw Error(Errc::InvalidArgument, "shared scale must be finite and nonnegative");
  }
}

Field upsample_bilinear(const SimilarityMap& m, std::size_t out_w, std::size_t out_h) {
  if (out_w == 0 || out_h == 0) throw Error(Errc::InvalidArgument, "output size must be >= 1");
  if (m.grid_h == 0 || m.grid_w == 0 || m.cells.size() != m.grid_h * m.grid_w) {
    throw Error(Errc::InvalidArgument, "malformed similarity map");
  }
  const double sx_scale = static_cast<double>(m.grid_w) / static_cast<double>(out_w);
  const double sy_scale = static_cast<double>(m.grid_h) / static_cast<double>(out_h);
  const double max_x = static_cast<double>(m.grid_w - 1);
  const double max_y = static_cast<double>(m.grid_h - 1);

  Field f{out_w, out_h, std::vector<double>(out_w * out_h)};
  for (std::size_t py = 0; py < out_h; ++py) {
    const double sy = std::clamp((static_cast<double>(py) + 0.5) * sy_scale - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, m.grid_h - 1);
    const double ty = sy - static_cast<double>(y0);
    for (std::size_t px = 0; px < out_w; ++px) {
      const double sx = std::clamp((static_cast<double>(px) + 0.5) * sx_scale - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, m.grid_w - 1);
      const double tx = sx - static_cast<double>(x0);
      const double top = m.at(y0, x0) + tx * (m.at(y0, x1) - m.at(y0, x0));
      const double bottom = m.at(y1, x0) + tx * (m.at(y1, x1) - m.at(y1, x0));
      f.values[py * out_w + px] = top + ty * (bottom - top);
    }
  }
  return f;
}

std::array<std::uint8_t, 3> colormap(double t) {
  t = std::clamp(t, 0.0, 1.0);
  // Blue -> green -> red; the falling channel is 255 minus the rising one.
  if (t <= 0.5) {
    const std::uint8_t g = round_half_up(510.0 * t);
    return {0, g, static_cast<std::uint8_t>(255 - g)};
  }
  const std::uint8_t r = round_half_up(510.0 * (t - 0.5));
  return {r, static_cast<std::uint8_t>(255 - r), 0};
}

std::vector<double> normalize(const Field& field, const RenderOptions& opts) {
  validate(opts);
  std::vector<double> t(field.values.size(), 0.0);
  const bool is_signed = opts.negative_handling == NegativeHandling::Signed;

  double scale = 0.0;
  if (opts.normalization == Normalization::Shared) {
    scale = opts.shared_scale;
  } else {
    for (double v : field.values) scale = std::max(scale, is_signed ? std::abs(v) : std::max(v, 0.0));
  }
  if (scale == 0.0) return t;

  for (std::size_t i = 0; i < t.size(); ++i) {
    const double v = field.values[i];
    const double u = is_signed ? (v + scale) / (2.0 * scale) : std::max(v, 0.0) / scale;
    t[i] = std::clamp(u, 0.0, 1.0);
  }
  return t;
}

RasterImage apply_colormap(const Field& field, const RenderOptions& opts) {
  const std::vector<double> t = normalize(field, opts);
  RasterImage img(field.width, field.height);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto rgb = colormap(t[i]);
    std::copy(rgb.begin(), rgb.end(), img.pixels.begin() + static_cast<std::ptrdiff_t>(3 * i));
  }
  return img;
}

RasterImage blend(const RasterImage& base, const RasterImage& heat, double alpha) {
  if (base.width != heat.width || base.height != heat.height) {
    throw Error(Errc::DimensionMismatch, "blend needs images of equal size");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in [0,1]");
  RasterImage out(base.width, base.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = round_half_up((1.0 - alpha) * base.pixels[i] + alpha * heat.pixels[i]);
  }
  return out;
}

RasterImage overlay(const SimilarityMap& m, const RasterImage& base, const RenderOptions& opts) {
  validate(base);
  const Field field = upsample_bilinear(m, base.width, base.height);
  return blend(base, apply_colormap(field, opts), opts.alpha);
}

double max_abs(std::span<const SimilarityMap* const> maps) {
  double s = 0.0;
  for (const SimilarityMap* m : maps) {
    for (double v : m->cells) s = std::max(s, std::abs(v));
  }
  return s;
}

}  // namespace simviz::render

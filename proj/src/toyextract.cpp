#include "simviz/toyextract.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "simviz/error.hpp"

namespace simviz::toy {
namespace {

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(Errc::InvalidArgument, "bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

void validate(const ExtractorConfig& cfg) {
  if (cfg.channels == 0 || cfg.filter_size == 0 || cfg.grid_h == 0 || cfg.grid_w == 0) {
    throw Error(Errc::InvalidArgument, "extractor channels, filter size and grid must all be >= 1");
  }
}

std::uint64_t SplitMix64::next() noexcept {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double draw_to_weight(std::uint64_t draw) noexcept { return std::ldexp(static_cast<double>(draw), -63) - 1.0; }

FilterBank make_filter_bank(const ExtractorConfig& cfg) {
  validate(cfg);
  FilterBank bank;
  bank.channels = cfg.channels;
  bank.filter_size = cfg.filter_size;
  bank.weights.resize(cfg.channels * cfg.filter_size * cfg.filter_size * 3);
  SplitMix64 rng(cfg.seed);
  for (double& w : bank.weights) w = draw_to_weight(rng.next());
  return bank;
}

std::vector<double> resize_bilinear_normalized(const RasterImage& img, std::size_t out_w, std::size_t out_h) {
  validate(img);
  const double sx_scale = static_cast<double>(img.width) / static_cast<double>(out_w);
  const double sy_scale = static_cast<double>(img.height) / static_cast<double>(out_h);
  const double max_x = static_cast<double>(img.width - 1);
  const double max_y = static_cast<double>(img.height - 1);
  const auto px = [&](std::size_t x, std::size_t y, std::size_t ch) { return img.at(x, y)[ch] / 255.0; };

  std::vector<double> out(out_w * out_h * 3);
  for (std::size_t dy = 0; dy < out_h; ++dy) {
    const double sy = std::clamp((static_cast<double>(dy) + 0.5) * sy_scale - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double ty = sy - static_cast<double>(y0);
    for (std::size_t dx = 0; dx < out_w; ++dx) {
      const double sx = std::clamp((static_cast<double>(dx) + 0.5) * sx_scale - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double tx = sx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double top = px(x0, y0, ch) + tx * (px(x1, y0, ch) - px(x0, y0, ch));
        const double bottom = px(x0, y1, ch) + tx * (px(x1, y1, ch) - px(x0, y1, ch));
        out[(dy * out_w + dx) * 3 + ch] = top + ty * (bottom - top);
      }
    }
  }
  return out;
}

ActivationTensor extract(const RasterImage& img, const ExtractorConfig& cfg) {
  return extract(img, cfg, make_filter_bank(cfg));
}

ActivationTensor extract(const RasterImage& img, const ExtractorConfig& cfg, const FilterBank& bank) {
  validate(cfg);
  validate(img);
  if (bank.channels != cfg.channels || bank.filter_size != cfg.filter_size) {
    throw Error(Errc::InvalidArgument, "filter bank does not match extractor config");
  }
  const std::size_t f = cfg.filter_size;
  if (img.width < f || img.height < f) {
    throw Error(Errc::ImageTooSmall, std::to_string(img.width) + "x" + std::to_string(img.height) +
                                         " image is smaller than the " + std::to_string(f) + "x" +
                                         std::to_string(f) + " filter");
  }
  const std::size_t out_w = cfg.grid_w * f;
  const std::size_t out_h = cfg.grid_h * f;
  const std::vector<double> field = resize_bilinear_normalized(img, out_w, out_h);

  ActivationTensor alpha(cfg.grid_h, cfg.grid_w, cfg.channels);
  for (std::size_t gy = 0; gy < cfg.grid_h; ++gy) {
    for (std::size_t gx = 0; gx < cfg.grid_w; ++gx) {
      for (std::size_t c = 0; c < cfg.channels; ++c) {
        double acc = 0.0;
        for (std::size_t fy = 0; fy < f; ++fy) {
          const double* row = &field[((gy * f + fy) * out_w + gx * f) * 3];
          for (std::size_t fx = 0; fx < f; ++fx) {
            for (std::size_t ch = 0; ch < 3; ++ch) acc += bank(c, fy, fx, ch) * row[fx * 3 + ch];
          }
        }
        alpha(gy, gx, c) = std::max(acc, 0.0);
      }
    }
  }
  return alpha;
}

std::string format_meta(const ExtractorConfig& cfg) {
  return "seed=" + std::to_string(cfg.seed) + "\nchannels=" + std::to_string(cfg.channels) +
         "\nfilter_size=" + std::to_string(cfg.filter_size) + "\ngrid=" + std::to_string(cfg.grid_h) + "x" +
         std::to_string(cfg.grid_w) + "\nnonlinearity=relu\n";
}

ExtractorConfig parse_meta(std::string_view text) {
  ExtractorConfig cfg;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::InvalidArgument, "meta line without '='");
    const std::string_view key = line.substr(0, eq);
    const std::string_view value = line.substr(eq + 1);
    if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(value, "seed");
    } else if (key == "channels") {
      cfg.channels = parse_number<std::size_t>(value, "channels");
    } else if (key == "filter_size") {
      cfg.filter_size = parse_number<std::size_t>(value, "filter_size");
    } else if (key == "grid") {
      parse_grid(value, cfg.grid_h, cfg.grid_w);
    } else if (key == "nonlinearity") {
      if (value != "relu") throw Error(Errc::InvalidArgument, "only relu is supported");
    } else {
      throw Error(Errc::InvalidArgument, "unknown meta key '" + std::string(key) + "'");
    }
  }
  validate(cfg);
  return cfg;
}

void parse_grid(std::string_view text, std::size_t& grid_h, std::size_t& grid_w) {
  const std::size_t x = text.find('x');
  if (x == std::string_view::npos) throw Error(Errc::InvalidArgument, "grid must be HxW, got '" + std::string(text) + "'");
  grid_h = parse_number<std::size_t>(text.substr(0, x), "grid height");
  grid_w = parse_number<std::size_t>(text.substr(x + 1), "grid width");
  if (grid_h == 0 || grid_w == 0) throw Error(Errc::InvalidArgument, "grid dimensions must be >= 1");
}

}  // namespace simviz::toy

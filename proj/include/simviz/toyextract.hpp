#pragma once

// Deterministic stand-in for a convolutional backbone: one seeded random
// convolution with stride equal to its filter size, followed by ReLU.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "simviz/image.hpp"
#include "simviz/simcore.hpp"

namespace simviz::toy {

struct ExtractorConfig {
  std::uint64_t seed = 0;
  std::size_t channels = 32;
  std::size_t filter_size = 8;
  std::size_t grid_h = 7;
  std::size_t grid_w = 7;

  friend bool operator==(const ExtractorConfig&, const ExtractorConfig&) = default;
};

void validate(const ExtractorConfig& cfg);

/// splitmix64 (Steele, Lea, Flood 2014).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  std::uint64_t next() noexcept;

 private:
  std::uint64_t state_;
};

/// Maps a 64-bit draw to [-1, 1) as draw / 2^63 - 1.
double draw_to_weight(std::uint64_t draw) noexcept;

struct FilterBank {
  std::size_t channels = 0;
  std::size_t filter_size = 0;
  std::vector<double> weights;  // (c, fy, fx, rgb) row-major

  double operator()(std::size_t c, std::size_t fy, std::size_t fx, std::size_t rgb) const {
    return weights[((c * filter_size + fy) * filter_size + fx) * 3 + rgb];
  }
  friend bool operator==(const FilterBank&, const FilterBank&) = default;
};

FilterBank make_filter_bank(const ExtractorConfig& cfg);

/// Image resampled to an out_w x out_h RGB field in [0,1] using bilinear
/// interpolation between pixel centres, edges clamped.
std::vector<double> resize_bilinear_normalized(const RasterImage& img, std::size_t out_w, std::size_t out_h);

ActivationTensor extract(const RasterImage& img, const ExtractorConfig& cfg);
ActivationTensor extract(const RasterImage& img, const ExtractorConfig& cfg, const FilterBank& bank);

/// `extractor.meta` contents: key=value lines.
std::string format_meta(const ExtractorConfig& cfg);
ExtractorConfig parse_meta(std::string_view text);

/// Parses "HxW".
void parse_grid(std::string_view text, std::size_t& grid_h, std::size_t& grid_w);

}  // namespace simviz::toy

#pragma once

// Spatial decomposition of cosine similarity between pooled embeddings.
//
// An embedding network ends in a grid of activations (grid_h x grid_w x C)
// followed by global average or max pooling. The cosine similarity of two
// pooled vectors splits exactly into per-cell contributions over either
// image's grid; those contributions form a SimilarityMap.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace simviz {

enum class PoolingMode { Avg, Max };

std::string_view to_string(PoolingMode mode) noexcept;
/// Accepts "avg" or "max"; throws Error(InvalidArgument) otherwise.
PoolingMode parse_pooling_mode(std::string_view text);

/// Last-convolutional-layer activations, stored row-major as (y, x, c).
class ActivationTensor {
 public:
  ActivationTensor() = default;
  /// Zero-filled tensor; throws Error(InvalidTensor) on a zero dimension.
  ActivationTensor(std::size_t grid_h, std::size_t grid_w, std::size_t channels);
  /// Throws Error(InvalidTensor) on zero dimensions, size mismatch, or non-finite values.
  ActivationTensor(std::size_t grid_h, std::size_t grid_w, std::size_t channels, std::vector<double> values);

  std::size_t grid_h() const noexcept { return grid_h_; }
  std::size_t grid_w() const noexcept { return grid_w_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t cells() const noexcept { return grid_h_ * grid_w_; }

  double& operator()(std::size_t y, std::size_t x, std::size_t c) { return values_[(y * grid_w_ + x) * channels_ + c]; }
  double operator()(std::size_t y, std::size_t x, std::size_t c) const {
    return values_[(y * grid_w_ + x) * channels_ + c];
  }
  /// The C-dimensional slice at one spatial cell.
  std::span<const double> cell(std::size_t y, std::size_t x) const {
    return {values_.data() + (y * grid_w_ + x) * channels_, channels_};
  }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const ActivationTensor&, const ActivationTensor&) = default;

 private:
  std::size_t grid_h_ = 0;
  std::size_t grid_w_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> values_;
};

struct PooledEmbedding {
  std::vector<double> components;
  PoolingMode pooling_mode = PoolingMode::Avg;
  std::size_t source_grid_h = 0;
  std::size_t source_grid_w = 0;

  std::size_t size() const noexcept { return components.size(); }
  friend bool operator==(const PooledEmbedding&, const PooledEmbedding&) = default;
};

/// Which image of a pair the map is laid out over.
enum class MapDirection { OverFirst, OverSecond };

struct SimilarityMap {
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  std::vector<double> cells;  // row-major, grid_h x grid_w
  double total = 0.0;         // sum of cells, accumulated in row-major order
  MapDirection direction = MapDirection::OverFirst;
  PoolingMode pooling_mode = PoolingMode::Avg;

  double at(std::size_t y, std::size_t x) const { return cells[y * grid_w + x]; }
  friend bool operator==(const SimilarityMap&, const SimilarityMap&) = default;
};

/// Max-pooling stand-in: each channel's maximum placed at its argmax cells,
/// split evenly across ties, zero elsewhere.
struct SurrogateTensor {
  ActivationTensor values;
  std::vector<std::size_t> tie_counts;  // N_c per channel
};

/// Axis-aligned rectangle in normalized image coordinates, origin top-left.
struct Region {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  static Region unit() noexcept { return {}; }
  friend bool operator==(const Region&, const Region&) = default;
};

/// Throws Error(InvalidRegion) unless 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1.
void validate(const Region& r);

PooledEmbedding avg_pool(const ActivationTensor& alpha);
PooledEmbedding max_pool(const ActivationTensor& alpha);
PooledEmbedding pool(const ActivationTensor& alpha, PoolingMode mode);

double l2_norm(std::span<const double> v);

/// Cosine similarity. Throws DimensionMismatch or ZeroNormEmbedding.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const PooledEmbedding& a, const PooledEmbedding& b);

SurrogateTensor surrogate(const ActivationTensor& alpha);

/// Per-cell contributions over alpha_i's grid to cos(beta_i, beta_j).
/// beta_i must equal pool(alpha_i, mode) to within 1e-9, otherwise
/// Error(PoolingInconsistent).
SimilarityMap decompose(const ActivationTensor& alpha_i, const PooledEmbedding& beta_i, const PooledEmbedding& beta_j,
                        PoolingMode mode);

/// Cumulative fraction of the similarity explained by the k largest
/// component-wise contributions, k = 1..C. Throws ZeroSimilarity when the
/// similarity is exactly zero.
std::vector<double> top_k_contribution_curve(const PooledEmbedding& beta_i, const PooledEmbedding& beta_j);

/// Cell-wise sum of decompose(alpha_q, beta_q, m, mode) over members, in order.
SimilarityMap class_map(const ActivationTensor& alpha_q, const PooledEmbedding& beta_q,
                        std::span<const PooledEmbedding> members, PoolingMode mode);

/// Fraction of cell (y, x)'s footprint covered by r.
double cell_coverage(std::size_t grid_h, std::size_t grid_w, std::size_t y, std::size_t x, const Region& r);

/// Map integral over r, each cell weighted by its area overlap with r.
double region_score(const SimilarityMap& m, const Region& r);

}  // namespace simviz

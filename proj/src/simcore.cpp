#include "simviz/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "simviz/error.hpp"

namespace simviz {
namespace {

constexpr double kPoolingTolerance = 1e-9;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void require_nonzero(double norm, const char* which) {
  if (norm == 0.0) throw Error(Errc::ZeroNormEmbedding, std::string(which) + " embedding has zero norm");
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(Errc::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b) + " components");
  }
}

void check_pooling(const ActivationTensor& alpha, const PooledEmbedding& beta, PoolingMode mode) {
  const PooledEmbedding expected = pool(alpha, mode);
  for (std::size_t c = 0; c < expected.size(); ++c) {
    const double e = expected.components[c];
    if (std::abs(e - beta.components[c]) > kPoolingTolerance * std::max(1.0, std::abs(e))) {
      throw Error(Errc::PoolingInconsistent, "component " + std::to_string(c) + " differs from " +
                                                 std::string(to_string(mode)) + "-pooling of the activations");
    }
  }
}

}  // namespace

std::string_view to_string(PoolingMode mode) noexcept { return mode == PoolingMode::Avg ? "avg" : "max"; }

PoolingMode parse_pooling_mode(std::string_view text) {
  if (text == "avg") return PoolingMode::Avg;
  if (text == "max") return PoolingMode::Max;
  throw Error(Errc::InvalidArgument, "pooling mode must be avg or max, got '" + std::string(text) + "'");
}

ActivationTensor::ActivationTensor(std::size_t grid_h, std::size_t grid_w, std::size_t channels)
    : ActivationTensor(grid_h, grid_w, channels, std::vector<double>(grid_h * grid_w * channels, 0.0)) {}

ActivationTensor::ActivationTensor(std::size_t grid_h, std::size_t grid_w, std::size_t channels,
                                   std::vector<double> values)
    : grid_h_(grid_h), grid_w_(grid_w), channels_(channels), values_(std::move(values)) {
  if (grid_h == 0 || grid_w == 0 || channels == 0) throw Error(Errc::InvalidTensor, "tensor dimensions must be >= 1");
  if (values_.size() != grid_h * grid_w * channels) {
    throw Error(Errc::InvalidTensor, "value count " + std::to_string(values_.size()) + " does not match " +
                                         std::to_string(grid_h) + "x" + std::to_string(grid_w) + "x" +
                                         std::to_string(channels));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidTensor, "non-finite activation");
  }
}

void validate(const Region& r) {
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(in_unit(r.x0) && in_unit(r.y0) && in_unit(r.x1) && in_unit(r.y1))) {
    throw Error(Errc::InvalidRegion, "region coordinates must lie in [0,1]");
  }
  if (!(r.x0 < r.x1 && r.y0 < r.y1)) throw Error(Errc::InvalidRegion, "region must have positive area");
}

PooledEmbedding avg_pool(const ActivationTensor& alpha) {
  const std::size_t C = alpha.channels();
  std::vector<double> sums(C, 0.0);
  for (std::size_t y = 0; y < alpha.grid_h(); ++y) {
    for (std::size_t x = 0; x < alpha.grid_w(); ++x) {
      const auto slice = alpha.cell(y, x);
      for (std::size_t c = 0; c < C; ++c) sums[c] += slice[c];
    }
  }
  const auto n = static_cast<double>(alpha.cells());
  for (double& s : sums) s /= n;
  return {std::move(sums), PoolingMode::Avg, alpha.grid_h(), alpha.grid_w()};
}

PooledEmbedding max_pool(const ActivationTensor& alpha) {
  const std::size_t C = alpha.channels();
  const auto first = alpha.cell(0, 0);
  std::vector<double> maxima(first.begin(), first.end());
  for (std::size_t y = 0; y < alpha.grid_h(); ++y) {
    for (std::size_t x = 0; x < alpha.grid_w(); ++x) {
      const auto slice = alpha.cell(y, x);
      for (std::size_t c = 0; c < C; ++c) maxima[c] = std::max(maxima[c], slice[c]);
    }
  }
  return {std::move(maxima), PoolingMode::Max, alpha.grid_h(), alpha.grid_w()};
}

PooledEmbedding pool(const ActivationTensor& alpha, PoolingMode mode) {
  return mode == PoolingMode::Avg ? avg_pool(alpha) : max_pool(alpha);
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "cosine similarity");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  require_nonzero(na, "first");
  require_nonzero(nb, "second");
  return dot(a, b) / (na * nb);
}

double cosine_similarity(const PooledEmbedding& a, const PooledEmbedding& b) {
  return cosine_similarity(a.components, b.components);
}

SurrogateTensor surrogate(const ActivationTensor& alpha) {
  const std::size_t C = alpha.channels();
  const PooledEmbedding maxima = max_pool(alpha);

  std::vector<std::size_t> ties(C, 0);
  for (std::size_t y = 0; y < alpha.grid_h(); ++y) {
    for (std::size_t x = 0; x < alpha.grid_w(); ++x) {
      for (std::size_t c = 0; c < C; ++c) {
        if (alpha(y, x, c) == maxima.components[c]) ++ties[c];
      }
    }
  }

  ActivationTensor out(alpha.grid_h(), alpha.grid_w(), C);
  for (std::size_t y = 0; y < alpha.grid_h(); ++y) {
    for (std::size_t x = 0; x < alpha.grid_w(); ++x) {
      for (std::size_t c = 0; c < C; ++c) {
        if (alpha(y, x, c) == maxima.components[c]) {
          out(y, x, c) = maxima.components[c] / static_cast<double>(ties[c]);
        }
      }
    }
  }
  return {std::move(out), std::move(ties)};
}

SimilarityMap decompose(const ActivationTensor& alpha_i, const PooledEmbedding& beta_i, const PooledEmbedding& beta_j,
                        PoolingMode mode) {
  require_same_length(alpha_i.channels(), beta_i.size(), "activations vs. own embedding");
  require_same_length(beta_i.size(), beta_j.size(), "embedding pair");
  const double norm_i = l2_norm(beta_i.components);
  const double norm_j = l2_norm(beta_j.components);
  require_nonzero(norm_i, "first");
  require_nonzero(norm_j, "second");
  check_pooling(alpha_i, beta_i, mode);

  SimilarityMap m;
  m.grid_h = alpha_i.grid_h();
  m.grid_w = alpha_i.grid_w();
  m.pooling_mode = mode;
  m.cells.resize(alpha_i.cells());

  if (mode == PoolingMode::Avg) {
    const double z = static_cast<double>(alpha_i.cells()) * norm_i * norm_j;
    for (std::size_t y = 0; y < m.grid_h; ++y) {
      for (std::size_t x = 0; x < m.grid_w; ++x) {
        m.cells[y * m.grid_w + x] = dot(alpha_i.cell(y, x), beta_j.components) / z;
      }
    }
  } else {
    const SurrogateTensor hat = surrogate(alpha_i);
    const double z = norm_i * norm_j;
    for (std::size_t y = 0; y < m.grid_h; ++y) {
      for (std::size_t x = 0; x < m.grid_w; ++x) {
        m.cells[y * m.grid_w + x] = dot(hat.values.cell(y, x), beta_j.components) / z;
      }
    }
  }

  for (double v : m.cells) m.total += v;
  return m;
}

std::vector<double> top_k_contribution_curve(const PooledEmbedding& beta_i, const PooledEmbedding& beta_j) {
  require_same_length(beta_i.size(), beta_j.size(), "embedding pair");
  const double norm_i = l2_norm(beta_i.components);
  const double norm_j = l2_norm(beta_j.components);
  require_nonzero(norm_i, "first");
  require_nonzero(norm_j, "second");

  std::vector<double> contrib(beta_i.size());
  for (std::size_t k = 0; k < contrib.size(); ++k) {
    contrib[k] = beta_i.components[k] * beta_j.components[k] / (norm_i * norm_j);
  }
  std::sort(contrib.begin(), contrib.end(), std::greater<>());

  std::vector<double> curve(contrib.size());
  double running = 0.0;
  for (std::size_t k = 0; k < contrib.size(); ++k) {
    running += contrib[k];
    curve[k] = running;
  }
  const double total = running;
  if (total == 0.0) throw Error(Errc::ZeroSimilarity, "similarity is zero; contribution fractions are undefined");
  for (double& v : curve) v /= total;
  return curve;
}

SimilarityMap class_map(const ActivationTensor& alpha_q, const PooledEmbedding& beta_q,
                        std::span<const PooledEmbedding> members, PoolingMode mode) {
  if (members.empty()) throw Error(Errc::EmptyClass, "class map needs at least one member");

  SimilarityMap acc;
  acc.grid_h = alpha_q.grid_h();
  acc.grid_w = alpha_q.grid_w();
  acc.pooling_mode = mode;
  acc.cells.assign(alpha_q.cells(), 0.0);
  for (const PooledEmbedding& member : members) {
    const SimilarityMap pair = decompose(alpha_q, beta_q, member, mode);
    for (std::size_t k = 0; k < acc.cells.size(); ++k) acc.cells[k] += pair.cells[k];
  }
  for (double v : acc.cells) acc.total += v;
  return acc;
}

double cell_coverage(std::size_t grid_h, std::size_t grid_w, std::size_t y, std::size_t x, const Region& r) {
  // Work in grid units so that a fully covered cell yields exactly 1.
  const auto gw = static_cast<double>(grid_w);
  const auto gh = static_cast<double>(grid_h);
  const auto fx = static_cast<double>(x);
  const auto fy = static_cast<double>(y);
  const double ox = std::min(r.x1 * gw, fx + 1.0) - std::max(r.x0 * gw, fx);
  const double oy = std::min(r.y1 * gh, fy + 1.0) - std::max(r.y0 * gh, fy);
  if (ox <= 0.0 || oy <= 0.0) return 0.0;
  return ox * oy;
}

double region_score(const SimilarityMap& m, const Region& r) {
  validate(r);
  double score = 0.0;
  for (std::size_t y = 0; y < m.grid_h; ++y) {
    for (std::size_t x = 0; x < m.grid_w; ++x) {
      const double w = cell_coverage(m.grid_h, m.grid_w, y, x, r);
      if (w > 0.0) score += m.cells[y * m.grid_w + x] * w;
    }
  }
  return score;
}

}  // namespace simviz

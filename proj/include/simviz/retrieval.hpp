#pragma once

// Exhaustive embedding index with whole-image and region-restricted ranking.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "simviz/manifest.hpp"
#include "simviz/simcore.hpp"

namespace simviz {

struct IndexRecord {
  std::string id;
  std::string class_label;
  PooledEmbedding embedding;
  std::filesystem::path activation_ref;  // resolved path
  std::filesystem::path image_ref;       // resolved path
};

struct RankedResult {
  std::size_t rank = 0;
  std::string id;
  std::string class_label;
  double score = 0.0;

  friend bool operator==(const RankedResult&, const RankedResult&) = default;
};

/// Immutable after construction; safe for concurrent readers.
class EmbeddingIndex {
 public:
  EmbeddingIndex(DatasetManifest manifest, PoolingMode mode, std::vector<IndexRecord> records);

  const DatasetManifest& manifest() const noexcept { return manifest_; }
  PoolingMode pooling_mode() const noexcept { return mode_; }
  std::size_t grid_h() const noexcept { return shape_.grid_h; }
  std::size_t grid_w() const noexcept { return shape_.grid_w; }
  std::size_t channels() const noexcept { return shape_.channels; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const std::vector<IndexRecord>& records() const noexcept { return records_; }
  /// Throws Error(UnknownId).
  const IndexRecord& at(std::string_view id) const;
  const IndexRecord* find(std::string_view id) const;

  ActivationTensor activation(const IndexRecord& r) const;
  /// The record's embedding under `mode`: the stored one for the index's own
  /// mode, otherwise pooled afresh from the activations.
  PooledEmbedding embedding(const IndexRecord& r, PoolingMode mode) const;

 private:
  DatasetManifest manifest_;
  PoolingMode mode_;
  TensorShape shape_;
  std::vector<IndexRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Pools every entry's activations (or loads its embedding file). Entries
/// whose embedding has zero norm are all reported in one ZeroNormEmbedding error.
EmbeddingIndex build_index(const DatasetManifest& manifest, PoolingMode mode);

/// Index directory: index.manifest, embeddings.npy (N*C float64, 1-D) and index.meta.
void save_index(const EmbeddingIndex& index, const std::filesystem::path& dir);
EmbeddingIndex load_index(const std::filesystem::path& dir);

/// Sorts by descending score, ties by ascending id, and assigns ranks 1..n.
void sort_and_rank(std::vector<RankedResult>& results);

std::vector<RankedResult> search(const EmbeddingIndex& index, std::string_view query_id, std::size_t k);
std::vector<RankedResult> region_search(const EmbeddingIndex& index, std::string_view query_id, const Region& region,
                                        std::size_t k);
/// Best result of each class, at most n_classes entries, re-ranked 1..n.
std::vector<RankedResult> group_by_class(const std::vector<RankedResult>& results, std::size_t n_classes);

/// Map laid out over `subject`'s grid for the pair (subject, other).
SimilarityMap pair_map(const EmbeddingIndex& index, std::string_view subject_id, std::string_view other_id,
                       PoolingMode mode);
SimilarityMap pair_map(const EmbeddingIndex& index, std::string_view subject_id, std::string_view other_id);

/// Same-class members of `id`, excluding `id` itself, in index order.
std::vector<const IndexRecord*> class_peers(const EmbeddingIndex& index, std::string_view id);

/// Sum of `id`'s pairwise maps against its class peers. Throws SingletonClass
/// when the class has no other member.
SimilarityMap class_similarity_map(const EmbeddingIndex& index, std::string_view id);

}  // namespace simviz

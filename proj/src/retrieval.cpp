#include "simviz/retrieval.hpp"

#include <algorithm>
#include <charconv>

#include "simviz/error.hpp"
#include "simviz/io_util.hpp"
#include "simviz/npy.hpp"
#include "simviz/tensor_io.hpp"

namespace simviz {
namespace {

constexpr const char* kManifestFile = "index.manifest";
constexpr const char* kEmbeddingsFile = "embeddings.npy";
constexpr const char* kMetaFile = "index.meta";

std::size_t parse_size(std::string_view text, std::string_view key) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(Errc::IndexFormat, "bad value for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return v;
}

std::vector<RankedResult> take(std::vector<RankedResult> all, std::size_t k) {
  sort_and_rank(all);
  if (all.size() > k) all.resize(k);
  return all;
}

void require_k(std::size_t k) {
  if (k == 0) throw Error(Errc::InvalidArgument, "k must be >= 1");
}

}  // namespace

EmbeddingIndex::EmbeddingIndex(DatasetManifest manifest, PoolingMode mode, std::vector<IndexRecord> records)
    : manifest_(std::move(manifest)), mode_(mode), records_(std::move(records)) {
  if (manifest_.shape) shape_ = *manifest_.shape;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!by_id_.emplace(records_[i].id, i).second) throw Error(Errc::DuplicateId, records_[i].id);
    if (records_[i].embedding.size() != shape_.channels) {
      throw Error(Errc::DimensionMismatch, "record '" + records_[i].id + "' has the wrong embedding length");
    }
  }
}

const IndexRecord* EmbeddingIndex::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

const IndexRecord& EmbeddingIndex::at(std::string_view id) const {
  const IndexRecord* r = find(id);
  if (!r) throw Error(Errc::UnknownId, "no record with id '" + std::string(id) + "'");
  return *r;
}

ActivationTensor EmbeddingIndex::activation(const IndexRecord& r) const {
  ActivationTensor t = load_activation(r.activation_ref);
  if (t.grid_h() != shape_.grid_h || t.grid_w() != shape_.grid_w || t.channels() != shape_.channels) {
    throw Error(Errc::ShapeMismatch, r.activation_ref.string() + " changed shape since the index was built");
  }
  return t;
}

PooledEmbedding EmbeddingIndex::embedding(const IndexRecord& r, PoolingMode mode) const {
  if (mode == mode_) return r.embedding;
  return pool(activation(r), mode);
}

EmbeddingIndex build_index(const DatasetManifest& manifest, PoolingMode mode) {
  std::vector<IndexRecord> records;
  records.reserve(manifest.entries.size());
  std::vector<std::string> zero_norm;
  for (const ManifestEntry& e : manifest.entries) {
    IndexRecord r;
    r.id = e.id;
    r.class_label = e.class_label;
    r.activation_ref = manifest.resolve(e.activation_path);
    r.image_ref = manifest.resolve(e.image_path);
    if (e.embedding_path) {
      r.embedding.components = load_embedding_components(manifest.resolve(*e.embedding_path));
      r.embedding.pooling_mode = mode;
      if (manifest.shape) {
        r.embedding.source_grid_h = manifest.shape->grid_h;
        r.embedding.source_grid_w = manifest.shape->grid_w;
      }
    } else {
      r.embedding = pool(load_activation(r.activation_ref), mode);
    }
    if (l2_norm(r.embedding.components) == 0.0) zero_norm.push_back(r.id);
    records.push_back(std::move(r));
  }
  if (!zero_norm.empty()) {
    std::string ids;
    for (const auto& id : zero_norm) ids += (ids.empty() ? "" : ", ") + id;
    throw Error(Errc::ZeroNormEmbedding, "zero-norm embeddings for ids: " + ids);
  }
  return EmbeddingIndex(manifest, mode, std::move(records));
}

void save_index(const EmbeddingIndex& index, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_text(dir / kManifestFile, format_manifest(index.manifest()));

  if (!index.empty()) {
    npy::ArrayFile emb;
    emb.dtype = npy::DType::F64;
    emb.shape = {index.size() * index.channels()};
    emb.data.reserve(emb.shape[0]);
    for (const IndexRecord& r : index.records()) {
      emb.data.insert(emb.data.end(), r.embedding.components.begin(), r.embedding.components.end());
    }
    npy::write_array_file(dir / kEmbeddingsFile, emb);
  }

  const std::filesystem::path root = std::filesystem::absolute(index.manifest().root).lexically_normal();
  std::string meta = "n=" + std::to_string(index.size()) + "\nc=" + std::to_string(index.channels()) + "\ngrid=" +
                     std::to_string(index.grid_h()) + "x" + std::to_string(index.grid_w()) + "\npooling_mode=" +
                     std::string(to_string(index.pooling_mode())) + "\nroot=" + root.generic_string() + "\n";
  io::write_text(dir / kMetaFile, meta);
}

EmbeddingIndex load_index(const std::filesystem::path& dir) {
  const std::string meta = io::read_text(dir / kMetaFile);
  std::optional<std::size_t> n, c, gh, gw;
  std::optional<PoolingMode> mode;
  std::optional<std::filesystem::path> root;
  std::size_t pos = 0;
  while (pos < meta.size()) {
    std::size_t end = meta.find('\n', pos);
    if (end == std::string::npos) end = meta.size();
    const std::string_view line = std::string_view(meta).substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::IndexFormat, "index.meta line without '='");
    const std::string_view key = line.substr(0, eq);
    const std::string_view value = line.substr(eq + 1);
    if (key == "n") {
      n = parse_size(value, key);
    } else if (key == "c") {
      c = parse_size(value, key);
    } else if (key == "grid") {
      const std::size_t x = value.find('x');
      if (x == std::string_view::npos) throw Error(Errc::IndexFormat, "grid must be HxW");
      gh = parse_size(value.substr(0, x), "grid");
      gw = parse_size(value.substr(x + 1), "grid");
    } else if (key == "pooling_mode") {
      mode = parse_pooling_mode(value);
    } else if (key == "root") {
      root = std::filesystem::path(std::string(value));
    } else {
      throw Error(Errc::IndexFormat, "unknown index.meta key '" + std::string(key) + "'");
    }
  }
  if (!n || !c || !gh || !gw || !mode || !root) throw Error(Errc::IndexFormat, "index.meta is missing a key");

  DatasetManifest manifest = parse_manifest(io::read_text(dir / kManifestFile), *root, true);
  if (manifest.entries.size() != *n) throw Error(Errc::IndexFormat, "index.manifest entry count differs from index.meta");
  if (manifest.shape && (manifest.shape->grid_h != *gh || manifest.shape->grid_w != *gw ||
                         manifest.shape->channels != *c)) {
    throw Error(Errc::IndexFormat, "activation shapes differ from index.meta");
  }

  std::vector<IndexRecord> records;
  if (*n > 0) {
    const npy::ArrayFile emb = npy::read_array_file(dir / kEmbeddingsFile);
    if (emb.shape.size() != 1 || emb.data.size() != *n * *c) {
      throw Error(Errc::IndexFormat, "embeddings.npy must be a 1-D array of n*c values");
    }
    records.reserve(*n);
    for (std::size_t i = 0; i < *n; ++i) {
      const ManifestEntry& e = manifest.entries[i];
      IndexRecord r;
      r.id = e.id;
      r.class_label = e.class_label;
      r.activation_ref = manifest.resolve(e.activation_path);
      r.image_ref = manifest.resolve(e.image_path);
      const auto first = emb.data.begin() + static_cast<std::ptrdiff_t>(i * *c);
      r.embedding.components.assign(first, first + static_cast<std::ptrdiff_t>(*c));
      r.embedding.pooling_mode = *mode;
      r.embedding.source_grid_h = *gh;
      r.embedding.source_grid_w = *gw;
      records.push_back(std::move(r));
    }
  }
  return EmbeddingIndex(std::move(manifest), *mode, std::move(records));
}

void sort_and_rank(std::vector<RankedResult>& results) {
  std::sort(results.begin(), results.end(), [](const RankedResult& a, const RankedResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  for (std::size_t i = 0; i < results.size(); ++i) results[i].rank = i + 1;
}

std::vector<RankedResult> search(const EmbeddingIndex& index, std::string_view query_id, std::size_t k) {
  require_k(k);
  const IndexRecord& q = index.at(query_id);
  std::vector<RankedResult> all;
  all.reserve(index.size());
  for (const IndexRecord& r : index.records()) {
    if (r.id == q.id) continue;
    all.push_back({0, r.id, r.class_label, cosine_similarity(q.embedding, r.embedding)});
  }
  return take(std::move(all), k);
}

std::vector<RankedResult> region_search(const EmbeddingIndex& index, std::string_view query_id, const Region& region,
                                        std::size_t k) {
  require_k(k);
  validate(region);
  const IndexRecord& q = index.at(query_id);
  const ActivationTensor alpha_q = index.activation(q);
  std::vector<RankedResult> all;
  all.reserve(index.size());
  for (const IndexRecord& r : index.records()) {
    if (r.id == q.id) continue;
    const SimilarityMap m = decompose(alpha_q, q.embedding, r.embedding, index.pooling_mode());
    all.push_back({0, r.id, r.class_label, region_score(m, region)});
  }
  return take(std::move(all), k);
}

std::vector<RankedResult> group_by_class(const std::vector<RankedResult>& results, std::size_t n_classes) {
  std::vector<RankedResult> out;
  for (const RankedResult& r : results) {
    if (out.size() >= n_classes) break;
    const bool seen = std::any_of(out.begin(), out.end(), [&](const RankedResult& o) {
      return o.class_label == r.class_label;
    });
    if (!seen) out.push_back(r);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

SimilarityMap pair_map(const EmbeddingIndex& index, std::string_view subject_id, std::string_view other_id,
                       PoolingMode mode) {
  const IndexRecord& subject = index.at(subject_id);
  const IndexRecord& other = index.at(other_id);
  const ActivationTensor alpha = index.activation(subject);
  const PooledEmbedding beta_s = mode == index.pooling_mode() ? subject.embedding : pool(alpha, mode);
  return decompose(alpha, beta_s, index.embedding(other, mode), mode);
}

SimilarityMap pair_map(const EmbeddingIndex& index, std::string_view subject_id, std::string_view other_id) {
  return pair_map(index, subject_id, other_id, index.pooling_mode());
}

std::vector<const IndexRecord*> class_peers(const EmbeddingIndex& index, std::string_view id) {
  const IndexRecord& q = index.at(id);
  std::vector<const IndexRecord*> peers;
  for (const IndexRecord& r : index.records()) {
    if (r.id != q.id && r.class_label == q.class_label) peers.push_back(&r);
  }
  return peers;
}

SimilarityMap class_similarity_map(const EmbeddingIndex& index, std::string_view id) {
  const IndexRecord& q = index.at(id);
  const auto peers = class_peers(index, id);
  if (peers.empty()) throw Error(Errc::SingletonClass, "class '" + q.class_label + "' has no other member");
  std::vector<PooledEmbedding> members;
  members.reserve(peers.size());
  for (const IndexRecord* p : peers) members.push_back(p->embedding);
  return class_map(index.activation(q), q.embedding, members, index.pooling_mode());
}

}  // namespace simviz

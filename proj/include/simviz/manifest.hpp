#pragma once

// Dataset manifests: a line-oriented text file listing images, their
// activation tensors and class labels.
//
//   simviz-manifest v1
//   # comment
//   id<TAB>image_path<TAB>activation_path<TAB>class_label[<TAB>embedding_path]
//
// Paths are relative to the directory holding the manifest. The optional
// fifth column names a precomputed 1-D embedding; when absent the embedding
// is pooled from the activations.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace simviz {

inline constexpr std::string_view kManifestMagic = "simviz-manifest v1";

struct ManifestEntry {
  std::string id;
  std::filesystem::path image_path;
  std::filesystem::path activation_path;
  std::string class_label;
  std::optional<std::filesystem::path> embedding_path;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct TensorShape {
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  std::size_t channels = 0;
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
  std::optional<TensorShape> shape;  // shared activation shape; empty for an empty manifest

  std::filesystem::path resolve(const std::filesystem::path& rel) const { return root / rel; }
};

/// Parses manifest text. With `check_files`, every path must exist under
/// `root` and all activation headers must agree on one shape.
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& root, bool check_files = true);

/// Loads `path`, using its parent directory as the root.
DatasetManifest load_manifest(const std::filesystem::path& path);

std::string format_manifest(const DatasetManifest& m);

}  // namespace simviz

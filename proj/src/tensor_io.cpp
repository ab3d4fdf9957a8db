#include "simviz/tensor_io.hpp"

#include <string>

#include "simviz/error.hpp"

namespace simviz {

ActivationTensor activation_from_array(const npy::ArrayFile& a) {
  if (a.shape.size() != 3) {
    throw Error(Errc::ShapeMismatch, "activation tensors must be 3-D, got " + std::to_string(a.shape.size()) + "-D");
  }
  return {a.shape[0], a.shape[1], a.shape[2], a.data};
}

npy::ArrayFile to_array(const ActivationTensor& t, npy::DType dtype) {
  npy::ArrayFile a;
  a.dtype = dtype;
  a.shape = {t.grid_h(), t.grid_w(), t.channels()};
  a.data.assign(t.values().begin(), t.values().end());
  if (dtype == npy::DType::F32) {
    for (double& v : a.data) v = static_cast<float>(v);
  }
  return a;
}

npy::ArrayFile to_array(const SimilarityMap& m) {
  return {npy::DType::F64, {m.grid_h, m.grid_w, 1}, m.cells};
}

SimilarityMap map_from_array(const npy::ArrayFile& a) {
  if (a.shape.size() != 3 || a.shape[2] != 1) throw Error(Errc::ShapeMismatch, "similarity maps have shape (h, w, 1)");
  SimilarityMap m;
  m.grid_h = a.shape[0];
  m.grid_w = a.shape[1];
  m.cells = a.data;
  for (double v : m.cells) m.total += v;
  return m;
}

ActivationTensor load_activation(const std::filesystem::path& path) {
  try {
    return activation_from_array(npy::read_array_file(path));
  } catch (const Error& e) {
    if (e.code() == Errc::ShapeMismatch) throw Error(e.code(), path.string() + ": " + e.detail());
    throw;
  }
}

std::vector<double> load_embedding_components(const std::filesystem::path& path) {
  npy::ArrayFile a = npy::read_array_file(path);
  if (a.shape.size() != 1) throw Error(Errc::ShapeMismatch, path.string() + ": embeddings must be 1-D");
  return std::move(a.data);
}

}  // namespace simviz

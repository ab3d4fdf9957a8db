#pragma once

// Conversions between the similarity types and on-disk arrays.

#include <filesystem>

#include "simviz/npy.hpp"
#include "simviz/simcore.hpp"

namespace simviz {

/// Requires a 3-D array (grid_h, grid_w, channels).
ActivationTensor activation_from_array(const npy::ArrayFile& a);
npy::ArrayFile to_array(const ActivationTensor& t, npy::DType dtype = npy::DType::F32);

/// Maps serialize as float64 arrays of shape (grid_h, grid_w, 1).
npy::ArrayFile to_array(const SimilarityMap& m);
SimilarityMap map_from_array(const npy::ArrayFile& a);

ActivationTensor load_activation(const std::filesystem::path& path);
/// A 1-D array of C components.
std::vector<double> load_embedding_components(const std::filesystem::path& path);

}  // namespace simviz

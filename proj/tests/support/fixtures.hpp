#pragma once

// Shared test helpers: seeded generators, temporary directories, toy
// datasets, and brute-force oracles that do not reuse library code paths.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "simviz/image.hpp"
#include "simviz/retrieval.hpp"
#include "simviz/simcore.hpp"
#include "simviz/toyextract.hpp"

namespace simviz::testing {

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Uniform values in [-1, 1) when `signed_values`, else [0, 1).
ActivationTensor random_tensor(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t c, bool signed_values);

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, bool signed_values);

/// Blocky random image: a few coloured rectangles on a random background.
RasterImage random_image(std::mt19937_64& rng, std::size_t w, std::size_t h);

struct ToyDataset {
  std::filesystem::path manifest_path;
  std::vector<std::string> ids;
};

/// Writes images (PPM), toy activations and a manifest into `dir`. Record i
/// gets class "c<i % n_classes>".
ToyDataset make_toy_dataset(const std::filesystem::path& dir, std::size_t n, std::size_t n_classes,
                            std::uint64_t seed, const toy::ExtractorConfig& cfg = {});

// -- oracles --------------------------------------------------------------

/// Cosine similarity by the textbook formula, long double accumulation.
double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Brute force: score all non-query records, sort by (score desc, id asc).
std::vector<RankedResult> oracle_rank(const std::vector<std::string>& ids, const std::vector<std::string>& classes,
                                      const std::vector<double>& scores, const std::string& query_id);

bool close_rel(double a, double b, double rel, double abs_floor = 0.0);

}  // namespace simviz::testing

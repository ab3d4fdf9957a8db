#include "support/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "simviz/io_util.hpp"
#include "simviz/manifest.hpp"
#include "simviz/npy.hpp"
#include "simviz/tensor_io.hpp"

namespace simviz::testing {
namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::mt19937_64 rng(std::random_device{}());
  path_ = fs::temp_directory_path() / ("simviz-test-" + std::to_string(rng()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

ActivationTensor random_tensor(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t c,
                               bool signed_values) {
  std::uniform_real_distribution<double> dist(signed_values ? -1.0 : 0.0, 1.0);
  std::vector<double> v(h * w * c);
  for (double& x : v) x = dist(rng);
  return {h, w, c, std::move(v)};
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, bool signed_values) {
  std::uniform_real_distribution<double> dist(signed_values ? -1.0 : 0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

RasterImage random_image(std::mt19937_64& rng, std::size_t w, std::size_t h) {
  std::uniform_int_distribution<int> byte(0, 255);
  RasterImage img(w, h);
  const std::uint8_t bg[3] = {static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                              static_cast<std::uint8_t>(byte(rng))};
  for (std::size_t i = 0; i < w * h; ++i) std::copy(bg, bg + 3, img.pixels.begin() + static_cast<long>(3 * i));
  for (int r = 0; r < 4; ++r) {
    std::uniform_int_distribution<std::size_t> xs(0, w - 1), ys(0, h - 1);
    std::size_t x0 = xs(rng), x1 = xs(rng), y0 = ys(rng), y1 = ys(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    const std::uint8_t col[3] = {static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                                 static_cast<std::uint8_t>(byte(rng))};
    for (std::size_t y = y0; y <= y1; ++y) {
      for (std::size_t x = x0; x <= x1; ++x) std::copy(col, col + 3, img.at(x, y));
    }
  }
  return img;
}

ToyDataset make_toy_dataset(const fs::path& dir, std::size_t n, std::size_t n_classes, std::uint64_t seed,
                            const toy::ExtractorConfig& cfg) {
  std::mt19937_64 rng(seed);
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "activations");
  const toy::FilterBank bank = toy::make_filter_bank(cfg);
  DatasetManifest manifest;
  manifest.root = dir;
  ToyDataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "img%03zu", i);
    const RasterImage img = random_image(rng, 40 + (i % 3) * 8, 36 + (i % 2) * 12);
    ManifestEntry e;
    e.id = id;
    e.class_label = "c" + std::to_string(i % n_classes);
    e.image_path = fs::path("images") / (e.id + ".ppm");
    e.activation_path = fs::path("activations") / (e.id + ".npy");
    write_image(img, dir / e.image_path);
    npy::write_array_file(dir / e.activation_path, to_array(toy::extract(img, cfg, bank), npy::DType::F64));
    ds.ids.push_back(e.id);
    manifest.entries.push_back(std::move(e));
  }
  ds.manifest_path = dir / "dataset.manifest";
  io::write_text(ds.manifest_path, format_manifest(manifest));
  return ds;
}

double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += static_cast<long double>(a[k]) * b[k];
    na += static_cast<long double>(a[k]) * a[k];
    nb += static_cast<long double>(b[k]) * b[k];
  }
  return static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

std::vector<RankedResult> oracle_rank(const std::vector<std::string>& ids, const std::vector<std::string>& classes,
                                      const std::vector<double>& scores, const std::string& query_id) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != query_id) order.push_back(i);
  }
  // Insertion sort: deliberately a different algorithm from the library's.
  for (std::size_t a = 1; a < order.size(); ++a) {
    for (std::size_t b = a; b > 0; --b) {
      const std::size_t l = order[b - 1], r = order[b];
      const bool swap = scores[r] > scores[l] || (scores[r] == scores[l] && ids[r] < ids[l]);
      if (!swap) break;
      std::swap(order[b - 1], order[b]);
    }
  }
  std::vector<RankedResult> out;
  for (std::size_t i = 0; i < order.size(); ++i) out.push_back({i + 1, ids[order[i]], classes[order[i]], scores[order[i]]});
  return out;
}

bool close_rel(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= std::max(rel * std::abs(b), abs_floor);
}

}  // namespace simviz::testing

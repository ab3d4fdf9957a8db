// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <json.hpp>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "simviz/cli.hpp"
#include "simviz/error.hpp"
#include "simviz/io_util.hpp"
#include "simviz/npy.hpp"
#include "simviz/report.hpp"
#include "simviz/service.hpp"
#include "simviz/tensor_io.hpp"
#include "support/fixtures.hpp"

using namespace simviz;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string note;
  std::size_t checks = 0;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok && pass) {
      pass = false;
      note = what;
    }
  }
};

// ---- independent reference computations ---------------------------------

std::vector<double> ref_pool(const ActivationTensor& a, PoolingMode mode) {
  std::vector<double> out(a.channels(), 0.0);
  for (std::size_t c = 0; c < a.channels(); ++c) {
    long double acc = 0.0L;
    double best = -INFINITY;
    for (std::size_t y = 0; y < a.grid_h(); ++y) {
      for (std::size_t x = 0; x < a.grid_w(); ++x) {
        acc += a(y, x, c);
        best = std::max(best, a(y, x, c));
      }
    }
    out[c] = mode == PoolingMode::Avg ? static_cast<double>(acc / static_cast<long double>(a.cells())) : best;
  }
  return out;
}

int invoke(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  if (code != 0) std::fprintf(stderr, "  cli %s failed: %s", args.front().c_str(), err.str().c_str());
  return code;
}

std::map<std::string, std::vector<std::uint8_t>> snapshot(const fs::path& root) {
  std::map<std::string, std::vector<std::uint8_t>> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = io::read_bytes(e.path());
  }
  return files;
}

void write_image_tree(const fs::path& dir, std::uint64_t seed, std::size_t per_class, std::size_t classes) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(40, 120);
  for (std::size_t k = 0; k < classes; ++k) {
    const fs::path sub = dir / ("class" + std::to_string(k));
    fs::create_directories(sub);
    for (std::size_t i = 0; i < per_class; ++i) {
      const char* ext = (i % 2) ? ".ppm" : ".png";
      write_image(testing::random_image(rng, size(rng), size(rng)), sub / ("im" + std::to_string(i) + ext));
    }
  }
}

// ---- criteria ------------------------------------------------------------

Outcome decomposition_identity() {
  Outcome o;
  std::mt19937_64 rng(1001);
  const std::size_t channel_choices[] = {1, 3, 32, 64};
  std::uniform_int_distribution<std::size_t> grid(1, 9);
  std::size_t pairs = 0;
  for (int t = 0; t < 1200; ++t) {
    const std::size_t c = channel_choices[t % 4];
    const bool is_signed = (t / 4) % 2 == 0;
    const PoolingMode mode = (t / 8) % 2 == 0 ? PoolingMode::Avg : PoolingMode::Max;
    const ActivationTensor ai = testing::random_tensor(rng, grid(rng), grid(rng), c, is_signed);
    const ActivationTensor aj = testing::random_tensor(rng, grid(rng), grid(rng), c, is_signed);
    const std::vector<double> ri = ref_pool(ai, mode);
    const std::vector<double> rj = ref_pool(aj, mode);
    if (std::all_of(ri.begin(), ri.end(), [](double v) { return v == 0.0; }) ||
        std::all_of(rj.begin(), rj.end(), [](double v) { return v == 0.0; })) {
      continue;
    }
    const double sim = testing::oracle_cosine(ri, rj);
    const PooledEmbedding bi = pool(ai, mode);
    const PooledEmbedding bj = pool(aj, mode);
    for (const bool over_i : {true, false}) {
      const SimilarityMap m = over_i ? decompose(ai, bi, bj, mode) : decompose(aj, bj, bi, mode);
      long double sum = 0.0L;
      for (double v : m.cells) sum += v;
      const double err = std::fabs(static_cast<double>(sum) - sim);
      const double tol = sim == 0.0 ? 1e-12 : 1e-9 * std::fabs(sim);
      o.expect(err <= tol, "pair " + std::to_string(t) + ": |sum - cos| = " + io::format9(err));
    }
    ++pairs;
  }
  o.expect(pairs >= 1000, "fewer than 1000 usable pairs");
  return o;
}

Outcome surrogate_correctness() {
  Outcome o;
  std::mt19937_64 rng(2002);
  std::uniform_int_distribution<std::size_t> grid(2, 8);
  std::uniform_int_distribution<int> pick(0, 5);
  bool saw_tie[5] = {};
  bool saw_zero = false;
  for (int t = 0; t < 500; ++t) {
    const std::size_t h = grid(rng), w = grid(rng), c = 16;
    ActivationTensor a = testing::random_tensor(rng, h, w, c, t % 2 == 0);
    std::vector<std::size_t> expected_ties(c, 1);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const int kind = pick(rng);
      if (kind == 0) {
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) a(y, x, ch) = 0.0;
        expected_ties[ch] = h * w;
        saw_zero = true;
      } else if (kind <= 3) {
        // Plant N equal maxima at distinct cells.
        const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(kind) + 1, h * w);
        std::vector<std::size_t> cells(h * w);
        for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
        std::shuffle(cells.begin(), cells.end(), rng);
        double top = -INFINITY;
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) top = std::max(top, a(y, x, ch));
        top += 0.25;
        for (std::size_t i = 0; i < n; ++i) a(cells[i] / w, cells[i] % w, ch) = top;
        expected_ties[ch] = n;
        saw_tie[n] = true;
      }
    }
    const SurrogateTensor s = surrogate(a);
    const std::vector<double> mx = ref_pool(a, PoolingMode::Max);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double sum = 0.0;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) sum += s.values(y, x, ch);
      o.expect(std::fabs(sum - mx[ch]) <= 1e-12, "channel sum differs from max by " + io::format9(sum - mx[ch]));
      if (expected_ties[ch] > 1) o.expect(s.tie_counts[ch] == expected_ties[ch], "tie count mismatch");
    }
  }
  o.expect(saw_tie[2] && saw_tie[3] && saw_tie[4] && saw_zero, "tie cases not all exercised");
  return o;
}

// Random guillotine partition of the unit square into rectangles.
void partition(std::mt19937_64& rng, const Region& r, int depth, std::vector<Region>& out) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::bernoulli_distribution stop(depth >= 5 ? 1.0 : 0.25);
  if (depth > 0 && stop(rng)) {
    out.push_back(r);
    return;
  }
  if (std::bernoulli_distribution(0.5)(rng)) {
    const double cut = r.x0 + u(rng) * (r.x1 - r.x0);
    partition(rng, {r.x0, r.y0, cut, r.y1}, depth + 1, out);
    partition(rng, {cut, r.y0, r.x1, r.y1}, depth + 1, out);
  } else {
    const double cut = r.y0 + u(rng) * (r.y1 - r.y0);
    partition(rng, {r.x0, r.y0, r.x1, cut}, depth + 1, out);
    partition(rng, {r.x0, cut, r.x1, r.y1}, depth + 1, out);
  }
}

Outcome region_additivity() {
  Outcome o;
  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<std::size_t> grid(1, 9);
  for (int t = 0; t < 100; ++t) {
    const PoolingMode mode = t % 2 ? PoolingMode::Max : PoolingMode::Avg;
    const bool is_signed = (t / 2) % 2 == 0;
    const ActivationTensor ai = testing::random_tensor(rng, grid(rng), grid(rng), 24, is_signed);
    const ActivationTensor aj = testing::random_tensor(rng, grid(rng), grid(rng), 24, is_signed);
    const SimilarityMap m = decompose(ai, pool(ai, mode), pool(aj, mode), mode);
    for (int p = 0; p < 20; ++p) {
      std::vector<Region> parts;
      partition(rng, {0.0, 0.0, 1.0, 1.0}, 0, parts);
      double sum = 0.0;
      for (const Region& r : parts) sum += region_score(m, r);
      o.expect(testing::close_rel(sum, m.total, 1e-9, 1e-12),
               "map " + std::to_string(t) + ": sum " + io::format9(sum) + " vs total " + io::format9(m.total));
    }
  }
  return o;
}

Outcome full_region_equivalence() {
  Outcome o;
  testing::TempDir dir;
  const auto ds = testing::make_toy_dataset(dir.path(), 50, 5, 4004);
  for (const PoolingMode mode : {PoolingMode::Avg, PoolingMode::Max}) {
    const EmbeddingIndex index = build_index(load_manifest(ds.manifest_path), mode);
    for (const std::string& q : ds.ids) {
      const auto plain = search(index, q, 49);
      const auto region = region_search(index, q, {0.0, 0.0, 1.0, 1.0}, 49);
      o.expect(plain.size() == region.size(), "length mismatch");
      for (std::size_t i = 0; i < std::min(plain.size(), region.size()); ++i) {
        o.expect(plain[i].id == region[i].id && plain[i].rank == region[i].rank, "order differs for query " + q);
        o.expect(testing::close_rel(plain[i].score, region[i].score, 1e-9), "score differs for query " + q);
      }
    }
  }
  return o;
}

Outcome retrieval_oracle() {
  Outcome o;
  testing::TempDir dir;
  for (const std::size_t n : {2, 7, 50, 120, 200}) {
    const fs::path sub = dir / ("n" + std::to_string(n));
    fs::create_directories(sub);
    // A fifth of the records are exact twins of earlier ones, forcing score ties.
    const std::size_t unique = n - n / 5;
    const auto ds = testing::make_toy_dataset(sub, unique, 4, 5000 + n);
    const DatasetManifest base = load_manifest(ds.manifest_path);
    DatasetManifest m = base;
    for (std::size_t i = 0; i < n - unique; ++i) {
      ManifestEntry twin = base.entries[(i * 7) % unique];
      twin.id = "twin" + std::to_string(i);
      m.entries.push_back(twin);
    }
    io::write_text(sub / "with_twins.manifest", format_manifest(m));
    const EmbeddingIndex index = build_index(load_manifest(sub / "with_twins.manifest"), PoolingMode::Avg);

    std::vector<std::string> ids, classes;
    for (const IndexRecord& r : index.records()) {
      ids.push_back(r.id);
      classes.push_back(r.class_label);
    }
    for (const IndexRecord& q : index.records()) {
      std::vector<double> scores;
      for (const IndexRecord& r : index.records()) {
        scores.push_back(testing::oracle_cosine(q.embedding.components, r.embedding.components));
      }
      const auto expected = testing::oracle_rank(ids, classes, scores, q.id);
      const auto got = search(index, q.id, n);
      o.expect(got.size() == expected.size(), "result count differs");
      for (std::size_t i = 0; i < std::min(got.size(), expected.size()); ++i) {
        o.expect(got[i].id == expected[i].id && got[i].rank == expected[i].rank,
                 "n=" + std::to_string(n) + " query " + q.id + " rank " + std::to_string(i + 1) + ": " + got[i].id +
                     " vs " + expected[i].id);
        o.expect(testing::close_rel(got[i].score, expected[i].score, 1e-12), "score differs");
      }
    }
  }
  return o;
}

Outcome curve_property() {
  Outcome o;
  std::mt19937_64 rng(6006);
  const std::size_t channel_choices[] = {8, 64, 256, 512};
  std::size_t big = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t c = channel_choices[t % 4];
    PooledEmbedding a{testing::random_vector(rng, c, false), PoolingMode::Avg, 1, 1};
    PooledEmbedding b{testing::random_vector(rng, c, false), PoolingMode::Avg, 1, 1};
    const auto curve = top_k_contribution_curve(a, b);
    o.expect(curve.size() == c, "curve length");
    for (std::size_t k = 1; k < curve.size(); ++k) o.expect(curve[k - 1] <= curve[k], "curve decreases");
    o.expect(std::fabs(curve.back() - 1.0) <= 1e-9, "curve ends at " + io::format9(curve.back()));
    if (c == 512) {
      ++big;
      o.expect(curve[9] < 1.0, "top-10 explains everything for C=512");
    }
  }
  o.expect(big == 250, "C=512 pairs missing");
  return o;
}

Outcome class_map_linearity() {
  Outcome o;
  testing::TempDir dir;
  // Classes of size 2..10 (class k has k+2 members), interleaved in the manifest.
  std::size_t total = 0;
  for (std::size_t k = 0; k < 9; ++k) total += k + 2;
  const auto ds = testing::make_toy_dataset(dir.path(), total, 1, 7007);
  DatasetManifest m = load_manifest(ds.manifest_path);
  std::vector<std::size_t> remaining(9);
  for (std::size_t k = 0; k < 9; ++k) remaining[k] = k + 2;
  std::size_t k = 0;
  for (ManifestEntry& e : m.entries) {
    while (remaining[k % 9] == 0) ++k;
    e.class_label = "k" + std::to_string(k % 9);
    --remaining[k % 9];
    ++k;
  }
  io::write_text(dir / "classes.manifest", format_manifest(m));
  for (const PoolingMode mode : {PoolingMode::Avg, PoolingMode::Max}) {
    const EmbeddingIndex index = build_index(load_manifest(dir / "classes.manifest"), mode);
    for (const IndexRecord& r : index.records()) {
      const SimilarityMap cm = class_similarity_map(index, r.id);
      std::vector<double> sum(cm.cells.size(), 0.0);
      std::size_t members = 0;
      for (const IndexRecord& peer : index.records()) {
        if (peer.class_label != r.class_label || peer.id == r.id) continue;
        const SimilarityMap pm = pair_map(index, r.id, peer.id);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += pm.cells[i];
        ++members;
      }
      o.expect(members >= 1 && members <= 9, "class size out of range");
      o.expect(cm.cells == sum, "class map of " + r.id + " is not the exact pairwise sum");
    }
  }
  return o;
}

bool is_enumerated(Errc c) {
  switch (c) {
    case Errc::BadMagic:
    case Errc::UnsupportedVersion:
    case Errc::UnsupportedDtype:
    case Errc::FortranOrderUnsupported:
    case Errc::HeaderSyntax:
    case Errc::TruncatedPayload:
    case Errc::NonFiniteElement: return true;
    default: return false;
  }
}

Outcome format_round_trips() {
  Outcome o;
  std::mt19937_64 rng(8008);
  std::uniform_int_distribution<std::size_t> dim(1, 12);
  std::normal_distribution<double> value(0.0, 1e3);
  std::vector<std::vector<std::uint8_t>> seeds;
  for (int t = 0; t < 100; ++t) {
    npy::ArrayFile a;
    a.dtype = t % 2 ? npy::DType::F32 : npy::DType::F64;
    a.shape = t % 3 ? std::vector<std::size_t>{dim(rng), dim(rng), dim(rng)} : std::vector<std::size_t>{dim(rng) * 5};
    std::size_t n = 1;
    for (std::size_t d : a.shape) n *= d;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = value(rng);
      a.data.push_back(a.dtype == npy::DType::F32 ? static_cast<double>(static_cast<float>(v)) : v);
    }
    const auto bytes = npy::write_array(a);
    const npy::ArrayFile back = npy::read_array(bytes);
    const bool same = back.dtype == a.dtype && back.shape == a.shape && back.data.size() == a.data.size() &&
                      std::memcmp(back.data.data(), a.data.data(), a.data.size() * sizeof(double)) == 0;
    o.expect(same, "round trip " + std::to_string(t) + " not bit-exact");
    o.expect(npy::write_array(back) == bytes, "rewrite differs");
    seeds.push_back(bytes);
  }

  // Header-directed mutations: byte edits, insertions, deletions, truncations and token splices.
  const std::vector<std::string> tokens = {"'<f4'", "'<f8'", "'<i4'", "'>f8'", "True", "False", "(", ")", ",", ":",
                                           "{", "}", "'shape'", "'descr'", "'fortran_order'", "0", "99999999999999999999",
                                           "\n", " ", "''", "(3,)", "()", "(1, 2)"};
  std::uniform_int_distribution<int> op(0, 5);
  std::size_t mutants = 0, accepted = 0;
  for (int t = 0; t < 12000; ++t) {
    std::vector<std::uint8_t> b = seeds[static_cast<std::size_t>(t) % seeds.size()];
    const std::size_t header_end = std::min<std::size_t>(b.size(), 128);
    std::uniform_int_distribution<std::size_t> pos(0, header_end - 1);
    const int rounds = 1 + t % 3;
    for (int r = 0; r < rounds && !b.empty(); ++r) {
      const std::size_t p = std::min(pos(rng), b.size() - 1);
      switch (op(rng)) {
        case 0: b[p] = static_cast<std::uint8_t>(rng()); break;
        case 1: b[p] ^= static_cast<std::uint8_t>(1u << (rng() % 8)); break;
        case 2: b.insert(b.begin() + static_cast<std::ptrdiff_t>(p), static_cast<std::uint8_t>(rng())); break;
        case 3: b.erase(b.begin() + static_cast<std::ptrdiff_t>(p)); break;
        case 4: b.resize(p); break;
        default: {
          const std::string& tok = tokens[rng() % tokens.size()];
          const std::size_t len = std::min<std::size_t>(rng() % 6, b.size() - p);
          b.erase(b.begin() + static_cast<std::ptrdiff_t>(p), b.begin() + static_cast<std::ptrdiff_t>(p + len));
          b.insert(b.begin() + static_cast<std::ptrdiff_t>(p), tok.begin(), tok.end());
        }
      }
    }
    ++mutants;
    try {
      const npy::ArrayFile a = npy::read_array(b);
      npy::validate(a);
      ++accepted;
    } catch (const Error& e) {
      o.expect(is_enumerated(e.code()), std::string("unexpected error kind: ") + e.what());
    } catch (const std::exception& e) {
      o.expect(false, std::string("non-enumerated exception: ") + e.what());
    }
  }
  o.expect(mutants >= 10000, "too few mutants");
  o.note += o.pass ? std::to_string(mutants) + " mutants, " + std::to_string(accepted) + " parsed as valid arrays" : "";
  return o;
}

Outcome end_to_end_determinism() {
  Outcome o;
  testing::TempDir dir;
  write_image_tree(dir / "raw", 9009, 4, 3);
  const fs::path work = dir / "work";
  std::map<std::string, std::vector<std::uint8_t>> first;
  for (int round = 0; round < 2; ++round) {
    fs::remove_all(work);
    const bool ok =
        invoke({"extract", "--images", (dir / "raw").string(), "--out", (work / "ds").string(), "--seed", "17"}) == 0 &&
        invoke({"ingest", "--manifest", (work / "ds" / "dataset.manifest").string(), "--mode", "max", "--out",
             (work / "idx").string()}) == 0 &&
        invoke({"pair", "--index", (work / "idx").string(), "--i", "class0_im1", "--j", "class2_im0", "--out-dir",
             (work / "pair").string()}) == 0 &&
        invoke({"pair", "--index", (work / "idx").string(), "--i", "class1_im3", "--j", "class1_im2", "--mode", "avg",
             "--norm", "shared", "--signed", "--out-dir", (work / "pair").string()}) == 0;
    o.expect(ok, "pipeline failed");
    if (!ok) return o;
    auto files = snapshot(work);
    if (round == 0) {
      first = std::move(files);
    } else {
      o.expect(files.size() == first.size(), "different artifact sets");
      for (const auto& [name, bytes] : first) {
        const auto it = files.find(name);
        o.expect(it != files.end() && it->second == bytes, name + " differs between runs");
      }
      std::size_t pngs = 0;
      for (const auto& [name, bytes] : first) pngs += name.size() > 4 && name.substr(name.size() - 4) == ".png";
      o.note = std::to_string(first.size()) + " artifacts compared, " + std::to_string(pngs) + " PNG";
    }
  }
  return o;
}

bool same9(double a, double b) { return io::format9(a) == io::format9(b); }

Outcome cross_interface() {
  Outcome o;
  testing::TempDir dir;
  write_image_tree(dir / "raw", 1010, 5, 4);
  const fs::path ds = dir / "ds", idx = dir / "idx";
  if (invoke({"extract", "--images", (dir / "raw").string(), "--out", ds.string(), "--seed", "5"}) != 0 ||
      invoke({"ingest", "--manifest", (ds / "dataset.manifest").string(), "--mode", "avg", "--out", idx.string()}) != 0) {
    o.expect(false, "pipeline failed");
    return o;
  }
  const Service service(load_index(idx));
  BackgroundServer server(service);
  httplib::Client http("127.0.0.1", server.port());
  const auto& records = service.index().records();
  const std::size_t n = records.size();

  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const std::string q = records[pick(rng)].id;
    std::string cand;
    do cand = records[pick(rng)].id;
    while (cand == q);
    double xs[2] = {u(rng), u(rng)}, ys[2] = {u(rng), u(rng)};
    std::sort(xs, xs + 2);
    std::sort(ys, ys + 2);
    if (xs[1] - xs[0] < 0.05) xs[1] = std::min(1.0, xs[0] + 0.05);
    if (ys[1] - ys[0] < 0.05) ys[1] = std::min(1.0, ys[0] + 0.05);
    char region[128];
    std::snprintf(region, sizeof region, "%.17g,%.17g,%.17g,%.17g", xs[0], ys[0], xs[1], ys[1]);
    const std::string tag = "triple " + std::to_string(t) + " (" + q + ", " + cand + ")";

    // Region search.
    std::string cli_out;
    invoke({"search", "--index", idx.string(), "--query", q, "--k", std::to_string(n - 1), "--region", region, "--format",
         "json-lines"},
        &cli_out);
    const auto cli_rows = parse_report(cli_out, ReportFormat::JsonLines);
    json req = {{"query_id", q}, {"k", n - 1}, {"region", {xs[0], ys[0], xs[1], ys[1]}}};
    const auto res = http.Post("/api/search", req.dump(), "application/json");
    o.expect(res && res->status == 200, tag + ": search request failed");
    if (!res || res->status != 200) continue;
    const json rows = json::parse(res->body);
    o.expect(rows.size() == cli_rows.size(), tag + ": result counts differ");
    bool found = false;
    for (std::size_t i = 0; i < std::min(rows.size(), cli_rows.size()); ++i) {
      o.expect(rows[i]["id"] == cli_rows[i].id && rows[i]["rank"] == cli_rows[i].rank &&
                   rows[i]["class_label"] == cli_rows[i].class_label,
               tag + ": row " + std::to_string(i) + " differs");
      o.expect(same9(rows[i]["score"].get<double>(), cli_rows[i].score), tag + ": score differs");
      found |= cli_rows[i].id == cand;
    }
    o.expect(found, tag + ": candidate missing from results");

    // Pair maps in both directions.
    std::string sim_line;
    const fs::path out = dir / ("pair" + std::to_string(t));
    invoke({"pair", "--index", idx.string(), "--i", q, "--j", cand, "--out-dir", out.string()}, &sim_line);
    for (const char* direction : {"i", "j"}) {
      const bool over_q = direction[0] == 'i';
      const auto mres = http.Get("/api/map?i=" + url_encode(q) + "&j=" + url_encode(cand) + "&direction=" + direction);
      o.expect(mres && mres->status == 200, tag + ": map request failed");
      if (!mres || mres->status != 200) continue;
      const json mj = json::parse(mres->body);
      const SimilarityMap cm = map_from_array(
          npy::read_array_file(out / ((over_q ? q + "_to_" + cand : cand + "_to_" + q) + ".npy")));
      o.expect(mj["cells"].size() == cm.cells.size(), tag + ": map size differs");
      for (std::size_t i = 0; i < std::min(cm.cells.size(), mj["cells"].size()); ++i) {
        o.expect(same9(mj["cells"][i].get<double>(), cm.cells[i]), tag + ": map cell differs");
      }
      o.expect(sim_line == "similarity=" + io::format9(mj["total"].get<double>()) + "\n", tag + ": similarity differs");
      const auto png = http.Get("/api/map?i=" + url_encode(q) + "&j=" + url_encode(cand) + "&direction=" + direction +
                                "&render=png");
      const auto file = io::read_bytes(out / ((over_q ? q + "_to_" + cand : cand + "_to_" + q) + ".png"));
      o.expect(png && std::string(file.begin(), file.end()) == png->body, tag + ": overlay PNG differs");
    }
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "decomposition identity", decomposition_identity},
      {2, "surrogate correctness", surrogate_correctness},
      {3, "region additivity", region_additivity},
      {4, "full-region equivalence", full_region_equivalence},
      {5, "retrieval oracle", retrieval_oracle},
      {6, "top-k curve property", curve_property},
      {7, "class-map linearity", class_map_linearity},
      {8, "format round-trips and parser fuzzing", format_round_trips},
      {9, "end-to-end determinism", end_to_end_determinism},
      {10, "cross-interface consistency", cross_interface},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("criterion %2d: %s  %s  [%zu checks]%s%s\n", c.number, o.pass ? "PASS" : "FAIL", c.name, o.checks,
                o.note.empty() ? "" : "  ", o.note.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

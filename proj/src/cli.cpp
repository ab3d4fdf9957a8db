#include "simviz/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>

#include "simviz/error.hpp"
#include "simviz/image.hpp"
#include "simviz/io_util.hpp"
#include "simviz/manifest.hpp"
#include "simviz/render.hpp"
#include "simviz/report.hpp"
#include "simviz/retrieval.hpp"
#include "simviz/service.hpp"
#include "simviz/tensor_io.hpp"
#include "simviz/toyextract.hpp"

namespace simviz::cli {
namespace fs = std::filesystem;
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

bool is_image_file(const fs::path& p) {
  try {
    image::format_for_path(p);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Region parse_region_flag(const std::string& text) {
  Region r;
  double* slots[] = {&r.x0, &r.y0, &r.x1, &r.y1};
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t comma = text.find(',', pos);
    const bool last = i == 3;
    if (last != (comma == std::string::npos)) throw UsageError("--region must be x0,y0,x1,y1");
    const std::string part = text.substr(pos, last ? std::string::npos : comma - pos);
    std::size_t used = 0;
    try {
      *slots[i] = std::stod(part, &used);
    } catch (const std::exception&) {
      throw UsageError("--region: bad number '" + part + "'");
    }
    if (used != part.size()) throw UsageError("--region: bad number '" + part + "'");
    pos = comma + 1;
  }
  try {
    validate(r);
  } catch (const Error& e) {
    throw UsageError("--region: " + e.detail());
  }
  return r;
}

// extract -----------------------------------------------------------------

struct ExtractArgs {
  std::string images;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t channels = 32;
  std::size_t filter = 8;
  std::string grid = "7x7";
};

int do_extract(const ExtractArgs& a, std::ostream& out) {
  toy::ExtractorConfig cfg;
  cfg.seed = a.seed;
  cfg.channels = a.channels;
  cfg.filter_size = a.filter;
  toy::parse_grid(a.grid, cfg.grid_h, cfg.grid_w);
  toy::validate(cfg);
  const toy::FilterBank bank = toy::make_filter_bank(cfg);

  if (!fs::is_directory(a.images)) throw Error(Errc::MissingFile, "image directory " + a.images + " not found");

  // Top-level files are unlabeled; files one level down take the folder name as class.
  struct Source {
    std::string id;
    std::string class_label;
    fs::path path;
  };
  std::vector<Source> sources;
  for (const fs::path& p : sorted_files(a.images)) sources.push_back({p.stem().string(), "unlabeled", p});
  std::vector<fs::path> subdirs;
  for (const auto& e : fs::directory_iterator(a.images)) {
    if (e.is_directory()) subdirs.push_back(e.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  for (const fs::path& d : subdirs) {
    const std::string label = d.filename().string();
    for (const fs::path& p : sorted_files(d)) sources.push_back({label + "_" + p.stem().string(), label, p});
  }

  const fs::path root(a.out);
  fs::create_directories(root / "activations");
  fs::create_directories(root / "images");
  DatasetManifest manifest;
  manifest.root = root;
  for (const Source& s : sources) {
    const auto bytes = io::read_bytes(s.path);
    RasterImage img;
    try {
      img = image::decode(bytes);
    } catch (const Error& e) {
      throw Error(e.code(), s.path.string() + ": " + e.detail());
    }
    const ActivationTensor alpha = toy::extract(img, cfg, bank);

    ManifestEntry e;
    e.id = s.id;
    e.class_label = s.class_label;
    e.image_path = fs::path("images") / (s.id + s.path.extension().string());
    e.activation_path = fs::path("activations") / (s.id + ".npy");
    if (std::any_of(manifest.entries.begin(), manifest.entries.end(), [&](const auto& m) { return m.id == e.id; })) {
      throw Error(Errc::DuplicateId, "two images map to id '" + e.id + "'");
    }
    io::write_bytes(root / e.image_path, bytes);
    npy::write_array_file(root / e.activation_path, to_array(alpha, npy::DType::F32));
    manifest.entries.push_back(std::move(e));
  }
  io::write_text(root / "dataset.manifest", format_manifest(manifest));
  io::write_text(root / "extractor.meta", toy::format_meta(cfg));
  out << "extracted=" << sources.size() << "\n";
  return 0;
}

// ingest ------------------------------------------------------------------

int do_ingest(const std::string& manifest_path, const std::string& mode, const std::string& out_dir,
              std::ostream& out) {
  const EmbeddingIndex index = build_index(load_manifest(manifest_path), parse_pooling_mode(mode));
  save_index(index, out_dir);
  out << "records=" << index.size() << "\n";
  return 0;
}

// pair --------------------------------------------------------------------

struct PairArgs {
  std::string index;
  std::string i;
  std::string j;
  std::string mode;
  std::string out_dir;
  double alpha = 0.5;
  std::string norm = "per_map";
  bool is_signed = false;
};

render::RenderOptions render_options(double alpha, const std::string& norm, bool is_signed) {
  render::RenderOptions opts;
  opts.alpha = alpha;
  if (norm == "per_map") {
    opts.normalization = render::Normalization::PerMap;
  } else if (norm == "shared") {
    opts.normalization = render::Normalization::Shared;
  } else {
    throw UsageError("--norm must be per_map or shared");
  }
  opts.negative_handling = is_signed ? render::NegativeHandling::Signed : render::NegativeHandling::ClampToZero;
  return opts;
}

int do_pair(const PairArgs& a, std::ostream& out) {
  render::RenderOptions opts = render_options(a.alpha, a.norm, a.is_signed);
  const EmbeddingIndex index = load_index(a.index);
  const PoolingMode mode = a.mode.empty() ? index.pooling_mode() : parse_pooling_mode(a.mode);

  const SimilarityMap i_to_j = pair_map(index, a.i, a.j, mode);
  SimilarityMap j_to_i = pair_map(index, a.j, a.i, mode);
  j_to_i.direction = MapDirection::OverSecond;
  const double similarity =
      cosine_similarity(index.embedding(index.at(a.i), mode), index.embedding(index.at(a.j), mode));

  const SimilarityMap* both[] = {&i_to_j, &j_to_i};
  opts.shared_scale = render::max_abs(both);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const std::string ij = a.i + "_to_" + a.j;
  const std::string ji = a.j + "_to_" + a.i;
  npy::write_array_file(dir / (ij + ".npy"), to_array(i_to_j));
  npy::write_array_file(dir / (ji + ".npy"), to_array(j_to_i));
  write_image(render::overlay(i_to_j, read_image(index.at(a.i).image_ref), opts), dir / (ij + ".png"));
  write_image(render::overlay(j_to_i, read_image(index.at(a.j).image_ref), opts), dir / (ji + ".png"));
  out << "similarity=" << io::format9(similarity) << "\n";
  return 0;
}

// classmap ----------------------------------------------------------------

int do_classmap(const std::string& index_dir, const std::string& id, const std::string& out_dir, std::ostream& out) {
  const EmbeddingIndex index = load_index(index_dir);
  const SimilarityMap m = class_similarity_map(index, id);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  npy::write_array_file(dir / (id + "_classmap.npy"), to_array(m));
  write_image(render::overlay(m, read_image(index.at(id).image_ref), {}), dir / (id + "_classmap.png"));
  out << "members=" << class_peers(index, id).size() << "\n";
  out << "total=" << io::format9(m.total) << "\n";
  return 0;
}

// topk --------------------------------------------------------------------

int do_topk(const std::string& index_dir, const std::string& i, const std::string& j, std::ostream& out) {
  const EmbeddingIndex index = load_index(index_dir);
  for (double v : top_k_contribution_curve(index.at(i).embedding, index.at(j).embedding)) out << fixed9(v) << "\n";
  return 0;
}

// search ------------------------------------------------------------------

struct SearchArgs {
  std::string index;
  std::string query;
  std::size_t k = 0;
  std::string region;
  std::size_t group_classes = 0;
  std::string format = "tsv";
};

int do_search(const SearchArgs& a, std::ostream& out) {
  const std::optional<Region> region = a.region.empty() ? std::nullopt : std::optional(parse_region_flag(a.region));
  const ReportFormat format = [&] {
    try {
      return parse_report_format(a.format);
    } catch (const Error&) {
      throw UsageError("--format must be tsv or json-lines");
    }
  }();
  const EmbeddingIndex index = load_index(a.index);
  const std::size_t depth = a.group_classes ? std::max<std::size_t>(index.size(), 1) : a.k;
  std::vector<RankedResult> results =
      region ? region_search(index, a.query, *region, depth) : search(index, a.query, depth);
  if (a.group_classes) {
    results = group_by_class(results, a.group_classes);
    if (results.size() > a.k) results.resize(a.k);
  }
  out << emit_report(results, format);
  return 0;
}

// serve -------------------------------------------------------------------

int do_serve(const std::string& index_dir, int port, const std::string& static_dir, const std::string& host,
             std::ostream& out) {
  ServiceOptions opts;
  if (!static_dir.empty()) opts.static_dir = static_dir;
  const Service service(load_index(index_dir), opts);
  out << "serving " << service.index().size() << " records on http://" << host << ":" << port << "/" << std::endl;
  serve(service, host, port);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Similarity-map toolkit for embedding networks", "simviz"};
  app.require_subcommand(1, 1);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Run the toy extractor over a directory of images");
  extract->add_option("--images", ex.images, "Image directory")->required();
  extract->add_option("--out", ex.out, "Output dataset directory")->required();
  extract->add_option("--seed", ex.seed, "Filter bank seed")->required();
  extract->add_option("--channels", ex.channels, "Filter count")->check(CLI::PositiveNumber);
  extract->add_option("--filter", ex.filter, "Filter size in pixels")->check(CLI::PositiveNumber);
  extract->add_option("--grid", ex.grid, "Output grid HxW");

  std::string manifest, mode, index_out;
  auto* ingest = app.add_subcommand("ingest", "Build an index from a dataset manifest");
  ingest->add_option("--manifest", manifest)->required();
  ingest->add_option("--mode", mode)->required()->check(CLI::IsMember({"avg", "max"}));
  ingest->add_option("--out", index_out)->required();

  PairArgs pa;
  auto* pair = app.add_subcommand("pair", "Write both similarity maps and overlays for an image pair");
  pair->add_option("--index", pa.index)->required();
  pair->add_option("--i", pa.i)->required();
  pair->add_option("--j", pa.j)->required();
  pair->add_option("--mode", pa.mode, "Pooling mode (defaults to the index's)")->check(CLI::IsMember({"avg", "max"}));
  pair->add_option("--out-dir", pa.out_dir)->required();
  pair->add_option("--alpha", pa.alpha)->check(CLI::Range(0.0, 1.0));
  pair->add_option("--norm", pa.norm)->check(CLI::IsMember({"per_map", "shared"}));
  pair->add_flag("--signed", pa.is_signed, "Map [-max_abs, max_abs] onto the colour ramp");

  std::string cm_index, cm_id, cm_out;
  auto* classmap = app.add_subcommand("classmap", "Class similarity map of one image against its class");
  classmap->add_option("--index", cm_index)->required();
  classmap->add_option("--id", cm_id)->required();
  classmap->add_option("--out-dir", cm_out)->required();

  std::string tk_index, tk_i, tk_j;
  auto* topk = app.add_subcommand("topk", "Cumulative top-K component contribution curve");
  topk->add_option("--index", tk_index)->required();
  topk->add_option("--i", tk_i)->required();
  topk->add_option("--j", tk_j)->required();

  SearchArgs sa;
  auto* search_cmd = app.add_subcommand("search", "Rank the index against a query record");
  search_cmd->add_option("--index", sa.index)->required();
  search_cmd->add_option("--query", sa.query)->required();
  search_cmd->add_option("--k", sa.k)->required()->check(CLI::PositiveNumber);
  search_cmd->add_option("--region", sa.region, "x0,y0,x1,y1 in normalized coordinates");
  search_cmd->add_option("--group-classes", sa.group_classes)->check(CLI::PositiveNumber);
  search_cmd->add_option("--format", sa.format)->check(CLI::IsMember({"tsv", "json-lines"}));

  std::string sv_index, sv_static, sv_host = "127.0.0.1";
  int sv_port = 0;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API over one index");
  serve_cmd->add_option("--index", sv_index)->required();
  serve_cmd->add_option("--port", sv_port)->required()->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--static", sv_static, "Directory served under /");
  serve_cmd->add_option("--host", sv_host);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*extract) return do_extract(ex, out);
    if (*ingest) return do_ingest(manifest, mode, index_out, out);
    if (*pair) return do_pair(pa, out);
    if (*classmap) return do_classmap(cm_index, cm_id, cm_out, out);
    if (*topk) return do_topk(tk_index, tk_i, tk_j, out);
    if (*search_cmd) return do_search(sa, out);
    if (*serve_cmd) return do_serve(sv_index, sv_port, sv_static, sv_host, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace simviz::cli

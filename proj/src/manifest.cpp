#include "simviz/manifest.hpp"

#include <unordered_set>

#include "simviz/error.hpp"
#include "simviz/io_util.hpp"
#include "simviz/npy.hpp"

namespace simviz {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::filesystem::path checked_relative(std::string_view field, std::size_t line_no) {
  const std::filesystem::path p = std::filesystem::path(field).lexically_normal();
  const std::string s = p.generic_string();
  if (field.empty() || p.is_absolute() || p.has_root_name() || s == ".." || s.starts_with("../")) {
    throw Error(Errc::ManifestSyntax,
                "line " + std::to_string(line_no) + ": path '" + std::string(field) + "' does not stay under the root");
  }
  return p;
}

void require_file(const DatasetManifest& m, const std::filesystem::path& rel, const std::string& id) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(m.resolve(rel), ec)) {
    throw Error(Errc::MissingFile, "entry '" + id + "': " + m.resolve(rel).string());
  }
}

}  // namespace

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& root, bool check_files) {
  DatasetManifest m;
  m.root = root;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_magic = false;
  std::unordered_set<std::string> ids;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!saw_magic) {
      if (line != kManifestMagic) throw Error(Errc::ManifestSyntax, "first line must be '" + std::string(kManifestMagic) + "'");
      saw_magic = true;
      continue;
    }
    if (line.empty() || line.front() == '#') continue;

    const auto fields = split_tabs(line);
    if (fields.size() != 4 && fields.size() != 5) {
      throw Error(Errc::ManifestSyntax,
                  "line " + std::to_string(line_no) + ": expected 4 or 5 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[3].empty()) {
      throw Error(Errc::ManifestSyntax, "line " + std::to_string(line_no) + ": empty id or class label");
    }
    ManifestEntry e;
    e.id = fields[0];
    e.image_path = checked_relative(fields[1], line_no);
    e.activation_path = checked_relative(fields[2], line_no);
    e.class_label = fields[3];
    if (fields.size() == 5) e.embedding_path = checked_relative(fields[4], line_no);
    if (!ids.insert(e.id).second) throw Error(Errc::DuplicateId, "id '" + e.id + "' appears more than once");
    m.entries.push_back(std::move(e));
  }
  if (!saw_magic) throw Error(Errc::ManifestSyntax, "empty manifest");

  if (!check_files) return m;

  for (const ManifestEntry& e : m.entries) {
    require_file(m, e.image_path, e.id);
    require_file(m, e.activation_path, e.id);
    if (e.embedding_path) require_file(m, *e.embedding_path, e.id);

    const npy::ArrayHeader h = npy::read_header_file(m.resolve(e.activation_path));
    if (h.shape.size() != 3) throw Error(Errc::ShapeMismatch, "entry '" + e.id + "': activation is not 3-D");
    const TensorShape shape{h.shape[0], h.shape[1], h.shape[2]};
    if (!m.shape) {
      m.shape = shape;
    } else if (*m.shape != shape) {
      throw Error(Errc::ShapeMismatch, "entry '" + e.id + "': activation shape " + std::to_string(shape.grid_h) + "x" +
                                           std::to_string(shape.grid_w) + "x" + std::to_string(shape.channels) +
                                           " differs from " + std::to_string(m.shape->grid_h) + "x" +
                                           std::to_string(m.shape->grid_w) + "x" + std::to_string(m.shape->channels));
    }
    if (e.embedding_path) {
      const npy::ArrayHeader eh = npy::read_header_file(m.resolve(*e.embedding_path));
      if (eh.shape.size() != 1 || eh.shape[0] != shape.channels) {
        throw Error(Errc::ShapeMismatch, "entry '" + e.id + "': embedding length does not match channel count");
      }
    }
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const std::string text = io::read_text(path);
  return parse_manifest(text, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::string format_manifest(const DatasetManifest& m) {
  std::string out(kManifestMagic);
  out += '\n';
  for (const ManifestEntry& e : m.entries) {
    out += e.id + '\t' + e.image_path.generic_string() + '\t' + e.activation_path.generic_string() + '\t' +
           e.class_label;
    if (e.embedding_path) out += '\t' + e.embedding_path->generic_string();
    out += '\n';
  }
  return out;
}

}  // namespace simviz

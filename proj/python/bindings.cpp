#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "simviz/cli.hpp"
#include "simviz/error.hpp"
#include "simviz/image.hpp"
#include "simviz/npy.hpp"
#include "simviz/render.hpp"
#include "simviz/retrieval.hpp"
#include "simviz/simcore.hpp"
#include "simviz/tensor_io.hpp"
#include "simviz/toyextract.hpp"

namespace py = pybind11;
using namespace simviz;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ActivationTensor tensor_from(const Array& a) {
  if (a.ndim() != 3) throw Error(Errc::ShapeMismatch, "activation tensor must be 3-D (grid_h, grid_w, channels)");
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  const auto c = static_cast<std::size_t>(a.shape(2));
  return ActivationTensor(h, w, c, std::vector<double>(a.data(), a.data() + a.size()));
}

Array tensor_to(const ActivationTensor& t) {
  Array out({t.grid_h(), t.grid_w(), t.channels()});
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

std::vector<double> vector_from(const Array& a) {
  if (a.ndim() != 1) throw Error(Errc::ShapeMismatch, "embedding must be 1-D");
  return {a.data(), a.data() + a.size()};
}

Array vector_to(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

PooledEmbedding embedding_from(const Array& a, PoolingMode mode) { return {vector_from(a), mode, 0, 0}; }

Array map_cells(const SimilarityMap& m) {
  Array out({m.grid_h, m.grid_w});
  std::copy(m.cells.begin(), m.cells.end(), out.mutable_data());
  return out;
}

Region region_from(const std::tuple<double, double, double, double>& r) {
  return {std::get<0>(r), std::get<1>(r), std::get<2>(r), std::get<3>(r)};
}

py::array image_to(const RasterImage& img) {
  py::array_t<std::uint8_t> out({img.height, img.width, std::size_t{3}});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_simviz, m) {
  m.doc() = "Similarity-map decomposition, retrieval and rendering";

  static py::exception<Error> error_type(m, "SimvizError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::enum_<PoolingMode>(m, "PoolingMode").value("avg", PoolingMode::Avg).value("max", PoolingMode::Max);

  py::class_<SimilarityMap>(m, "SimilarityMap")
      .def_property_readonly("cells", &map_cells)
      .def_readonly("total", &SimilarityMap::total)
      .def_readonly("grid_h", &SimilarityMap::grid_h)
      .def_readonly("grid_w", &SimilarityMap::grid_w)
      .def_readonly("pooling_mode", &SimilarityMap::pooling_mode)
      .def("__repr__", [](const SimilarityMap& s) {
        std::ostringstream o;
        o << "SimilarityMap(" << s.grid_h << "x" << s.grid_w << ", total=" << s.total << ")";
        return o.str();
      });

  py::class_<RankedResult>(m, "RankedResult")
      .def_readonly("rank", &RankedResult::rank)
      .def_readonly("id", &RankedResult::id)
      .def_readonly("class_label", &RankedResult::class_label)
      .def_readonly("score", &RankedResult::score)
      .def("__repr__", [](const RankedResult& r) {
        std::ostringstream o;
        o << "RankedResult(" << r.rank << ", '" << r.id << "', '" << r.class_label << "', " << r.score << ")";
        return o.str();
      });

  // Arrays and images.
  m.def("read_array", [](const std::filesystem::path& p) {
    const npy::ArrayFile a = npy::read_array_file(p);
    Array out(std::vector<py::ssize_t>(a.shape.begin(), a.shape.end()));
    std::copy(a.data.begin(), a.data.end(), out.mutable_data());
    return out;
  });
  m.def(
      "write_array",
      [](const std::filesystem::path& p, const Array& a, const std::string& dtype) {
        npy::ArrayFile f;
        if (dtype == "float32") {
          f.dtype = npy::DType::F32;
        } else if (dtype == "float64") {
          f.dtype = npy::DType::F64;
        } else {
          throw Error(Errc::UnsupportedDtype, "dtype must be float32 or float64");
        }
        for (py::ssize_t i = 0; i < a.ndim(); ++i) f.shape.push_back(static_cast<std::size_t>(a.shape(i)));
        f.data.assign(a.data(), a.data() + a.size());
        if (f.dtype == npy::DType::F32) {
          for (double& v : f.data) v = static_cast<float>(v);
        }
        npy::write_array_file(p, f);
      },
      py::arg("path"), py::arg("array"), py::arg("dtype") = "float64");
  m.def("read_image", [](const std::filesystem::path& p) { return image_to(read_image(p)); });

  // Decomposition.
  m.def(
      "pool", [](const Array& a, PoolingMode mode) { return vector_to(pool(tensor_from(a), mode).components); },
      py::arg("alpha"), py::arg("mode") = PoolingMode::Avg);
  m.def("cosine_similarity",
        [](const Array& a, const Array& b) { return cosine_similarity(vector_from(a), vector_from(b)); });
  m.def("surrogate", [](const Array& a) {
    const SurrogateTensor s = surrogate(tensor_from(a));
    return py::make_tuple(tensor_to(s.values), s.tie_counts);
  });
  m.def(
      "decompose",
      [](const Array& alpha_i, const Array& beta_i, const Array& beta_j, PoolingMode mode) {
        return decompose(tensor_from(alpha_i), embedding_from(beta_i, mode), embedding_from(beta_j, mode), mode);
      },
      py::arg("alpha_i"), py::arg("beta_i"), py::arg("beta_j"), py::arg("mode") = PoolingMode::Avg);
  m.def(
      "pair_maps",
      [](const Array& alpha_i, const Array& alpha_j, PoolingMode mode) {
        const ActivationTensor ai = tensor_from(alpha_i), aj = tensor_from(alpha_j);
        const PooledEmbedding bi = pool(ai, mode), bj = pool(aj, mode);
        return py::make_tuple(decompose(ai, bi, bj, mode), decompose(aj, bj, bi, mode));
      },
      py::arg("alpha_i"), py::arg("alpha_j"), py::arg("mode") = PoolingMode::Avg);
  m.def("top_k_contribution_curve", [](const Array& a, const Array& b) {
    return vector_to(top_k_contribution_curve(embedding_from(a, PoolingMode::Avg), embedding_from(b, PoolingMode::Avg)));
  });
  m.def("region_score", [](const SimilarityMap& s, const std::tuple<double, double, double, double>& r) {
    return region_score(s, region_from(r));
  });

  // Toy extractor.
  m.def(
      "extract",
      [](const std::filesystem::path& image, std::uint64_t seed, std::size_t channels, std::size_t filter_size,
         std::size_t grid_h, std::size_t grid_w) {
        return tensor_to(toy::extract(read_image(image), {seed, channels, filter_size, grid_h, grid_w}));
      },
      py::arg("image"), py::arg("seed") = 0, py::arg("channels") = 32, py::arg("filter_size") = 8,
      py::arg("grid_h") = 7, py::arg("grid_w") = 7);

  // Index and retrieval.
  py::class_<EmbeddingIndex>(m, "EmbeddingIndex")
      .def("__len__", &EmbeddingIndex::size)
      .def_property_readonly("pooling_mode", &EmbeddingIndex::pooling_mode)
      .def_property_readonly("ids",
                             [](const EmbeddingIndex& idx) {
                               std::vector<std::string> ids;
                               for (const IndexRecord& r : idx.records()) ids.push_back(r.id);
                               return ids;
                             })
      .def("embedding", [](const EmbeddingIndex& idx, const std::string& id) {
        return vector_to(idx.at(id).embedding.components);
      });
  m.def(
      "build_index",
      [](const std::filesystem::path& manifest, PoolingMode mode) { return build_index(load_manifest(manifest), mode); },
      py::arg("manifest"), py::arg("mode") = PoolingMode::Avg);
  m.def("save_index", &save_index);
  m.def("load_index", &load_index);
  m.def(
      "search",
      [](const EmbeddingIndex& idx, const std::string& query, std::size_t k,
         const std::optional<std::tuple<double, double, double, double>>& region) {
        return region ? region_search(idx, query, region_from(*region), k) : search(idx, query, k);
      },
      py::arg("index"), py::arg("query_id"), py::arg("k"), py::arg("region") = py::none());
  m.def("group_by_class", &group_by_class);
  m.def(
      "pair_map",
      [](const EmbeddingIndex& idx, const std::string& subject, const std::string& other) {
        return pair_map(idx, subject, other);
      },
      py::arg("index"), py::arg("subject_id"), py::arg("other_id"));
  m.def("class_similarity_map", &class_similarity_map);

  // Rendering.
  m.def(
      "overlay",
      [](const SimilarityMap& s, const std::filesystem::path& image, double alpha) {
        render::RenderOptions opts;
        opts.alpha = alpha;
        return image_to(render::overlay(s, read_image(image), opts));
      },
      py::arg("map"), py::arg("image"), py::arg("alpha") = 0.5);

  // Command line, in-process.
  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}

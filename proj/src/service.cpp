#include "simviz/service.hpp"

#include <httplib.h>

#include <json.hpp>
#include <thread>

#include "simviz/error.hpp"
#include "simviz/image.hpp"
#include "simviz/report.hpp"

namespace simviz {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::size_t kWorkerThreads = 16;

Response json_response(int status, const ordered_json& body) { return {status, "application/json", body.dump()}; }

Response error_response(int status, std::string_view code, std::string_view detail = {}) {
  ordered_json j;
  j["error"] = code;
  if (!detail.empty()) j["detail"] = detail;
  return json_response(status, j);
}

Response png_response(const RasterImage& img) {
  const auto bytes = image::encode_png(img);
  return {200, "image/png", std::string(bytes.begin(), bytes.end())};
}

// Maps library errors onto HTTP statuses.
Response from_error(const Error& e) {
  switch (e.code()) {
    case Errc::UnknownId: return error_response(404, "unknown_id", e.detail());
    case Errc::SingletonClass: return error_response(409, "singleton_class", e.detail());
    case Errc::InvalidRegion:
    case Errc::InvalidArgument: return error_response(400, "bad_request", e.detail());
    default: return error_response(500, "internal", e.what());
  }
}

template <typename F>
Response guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return from_error(e);
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, "bad_request", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

ordered_json map_json(const SimilarityMap& m) {
  ordered_json j;
  j["grid_h"] = m.grid_h;
  j["grid_w"] = m.grid_w;
  j["total"] = m.total;
  j["cells"] = m.cells;
  return j;
}

std::string param(const QueryParams& params, std::string_view key, std::string_view fallback = {}) {
  const auto it = params.find(key);
  return it == params.end() ? std::string(fallback) : it->second;
}

std::string require_param(const QueryParams& params, std::string_view key) {
  const auto it = params.find(key);
  if (it == params.end() || it->second.empty()) {
    throw Error(Errc::InvalidArgument, "missing query parameter '" + std::string(key) + "'");
  }
  return it->second;
}

Region parse_region(const nlohmann::json& j) {
  Region r;
  if (j.is_array()) {
    if (j.size() != 4) throw Error(Errc::InvalidArgument, "region array must have 4 numbers");
    r = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  } else if (j.is_object()) {
    r = {j.at("x0").get<double>(), j.at("y0").get<double>(), j.at("x1").get<double>(), j.at("y1").get<double>()};
  } else {
    throw Error(Errc::InvalidArgument, "region must be an object {x0,y0,x1,y1} or a 4-element array");
  }
  validate(r);
  return r;
}

std::size_t positive_count(const nlohmann::json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 1) {
    throw Error(Errc::InvalidArgument, std::string(what) + " must be an integer >= 1");
  }
  return j.get<std::size_t>();
}

QueryParams to_params(const httplib::Request& req) {
  QueryParams p;
  for (const auto& [k, v] : req.params) p.emplace(k, v);
  return p;
}

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

}  // namespace

std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

std::optional<SimilarityMap> MapCache::get(const std::string& key) {
  std::lock_guard lock(mu_);
  const auto it = slots_.find(key);
  if (it == slots_.end()) return std::nullopt;
  order_.splice(order_.begin(), order_, it->second);
  return it->second->second;
}

void MapCache::put(const std::string& key, const SimilarityMap& m) {
  if (capacity_ == 0) return;
  std::lock_guard lock(mu_);
  if (const auto it = slots_.find(key); it != slots_.end()) {
    order_.splice(order_.begin(), order_, it->second);
    return;
  }
  order_.emplace_front(key, m);
  slots_[key] = order_.begin();
  if (order_.size() > capacity_) {
    slots_.erase(order_.back().first);
    order_.pop_back();
  }
}

std::size_t MapCache::size() const {
  std::lock_guard lock(mu_);
  return order_.size();
}

Service::Service(EmbeddingIndex index, ServiceOptions opts)
    : index_(std::move(index)), opts_(std::move(opts)), cache_(opts_.cache_capacity) {
  render::validate(opts_.render);
}

SimilarityMap Service::cached_map(const std::string& subject, const std::string& other) const {
  const std::string key = subject + '\0' + other;
  if (auto hit = cache_.get(key)) return *hit;
  SimilarityMap m = pair_map(index_, subject, other);
  cache_.put(key, m);
  return m;
}

Response Service::images() const {
  return guarded([&] {
    std::vector<const IndexRecord*> sorted;
    for (const IndexRecord& r : index_.records()) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
    ordered_json list = ordered_json::array();
    for (const IndexRecord* r : sorted) {
      ordered_json j;
      j["id"] = r->id;
      j["class_label"] = r->class_label;
      j["thumbnail_url"] = "/api/image/" + url_encode(r->id);
      list.push_back(std::move(j));
    }
    return json_response(200, list);
  });
}

Response Service::image(std::string_view id) const {
  return guarded([&] { return png_response(read_image(index_.at(id).image_ref)); });
}

Response Service::search(std::string_view body) const {
  return guarded([&] {
    const auto req = nlohmann::json::parse(body);
    if (!req.is_object()) throw Error(Errc::InvalidArgument, "request body must be a JSON object");
    const std::string query = req.at("query_id").get<std::string>();
    const std::size_t k = positive_count(req.at("k"), "k");
    std::optional<Region> region;
    if (req.contains("region") && !req["region"].is_null()) region = parse_region(req["region"]);
    std::optional<std::size_t> groups;
    if (req.contains("group_classes") && !req["group_classes"].is_null()) {
      groups = positive_count(req["group_classes"], "group_classes");
    }

    index_.at(query);
    const std::size_t depth = groups ? std::max<std::size_t>(index_.size(), 1) : k;
    std::vector<RankedResult> results =
        region ? region_search(index_, query, *region, depth) : simviz::search(index_, query, depth);
    if (groups) {
      results = group_by_class(results, *groups);
      if (results.size() > k) results.resize(k);
    }

    ordered_json list = ordered_json::array();
    for (const RankedResult& r : results) {
      ordered_json j;
      j["rank"] = r.rank;
      j["id"] = r.id;
      j["class_label"] = r.class_label;
      j["score"] = round9(r.score);
      j["map_url"] = "/api/map?i=" + url_encode(query) + "&j=" + url_encode(r.id) + "&direction=i&render=png";
      list.push_back(std::move(j));
    }
    return json_response(200, list);
  });
}

Response Service::map(const QueryParams& params) const {
  return guarded([&] {
    const std::string i = require_param(params, "i");
    const std::string j = require_param(params, "j");
    const std::string direction = param(params, "direction", "i");
    const std::string render = param(params, "render", "json");
    if (direction != "i" && direction != "j") throw Error(Errc::InvalidArgument, "direction must be i or j");
    if (render != "json" && render != "png") throw Error(Errc::InvalidArgument, "render must be json or png");
    index_.at(i);
    index_.at(j);

    const std::string& subject = direction == "i" ? i : j;
    const std::string& other = direction == "i" ? j : i;
    const SimilarityMap m = cached_map(subject, other);
    if (render == "json") return json_response(200, map_json(m));
    return png_response(render::overlay(m, read_image(index_.at(subject).image_ref), opts_.render));
  });
}

Response Service::classmap(std::string_view id, const QueryParams& params) const {
  return guarded([&] {
    const std::string render = param(params, "render", "json");
    if (render != "json" && render != "png") throw Error(Errc::InvalidArgument, "render must be json or png");
    const SimilarityMap m = class_similarity_map(index_, id);
    if (render == "json") return json_response(200, map_json(m));
    return png_response(render::overlay(m, read_image(index_.at(id).image_ref), opts_.render));
  });
}

void Service::mount(httplib::Server& server) const {
  server.Get("/api/images", [this](const httplib::Request&, httplib::Response& res) { reply(res, images()); });
  server.Get(R"(/api/image/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, image(httplib::detail::decode_url(req.matches[1], false)));
  });
  server.Post("/api/search",
              [this](const httplib::Request& req, httplib::Response& res) { reply(res, search(req.body)); });
  server.Get("/api/map",
             [this](const httplib::Request& req, httplib::Response& res) { reply(res, map(to_params(req))); });
  server.Get(R"(/api/classmap/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, classmap(httplib::detail::decode_url(req.matches[1], false), to_params(req)));
  });
  if (opts_.static_dir) {
    if (!server.set_mount_point("/", opts_.static_dir->string())) {
      throw Error(Errc::MissingFile, "static directory " + opts_.static_dir->string() + " does not exist");
    }
  }
  server.new_task_queue = [] { return new httplib::ThreadPool(kWorkerThreads); };
}

struct BackgroundServer::Impl {
  httplib::Server server;
  std::thread thread;
};

BackgroundServer::BackgroundServer(const Service& service, const std::string& host, int port)
    : impl_(std::make_unique<Impl>()) {
  service.mount(impl_->server);
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw Error(Errc::Io, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

BackgroundServer::~BackgroundServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void serve(const Service& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  if (!server.listen(host, port)) throw Error(Errc::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace simviz

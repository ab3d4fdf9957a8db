#pragma once

// Read-only HTTP facade over one loaded index.
//
//   GET  /api/images
//   GET  /api/image/{id}                     original image as PNG
//   POST /api/search     {query_id, k, region?, group_classes?}
//   GET  /api/map?i=ID&j=ID&direction=i|j&render=json|png
//   GET  /api/classmap/{id}?render=json|png
//   GET  /                                   static files (optional)

#include <cstddef>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "simviz/render.hpp"
#include "simviz/retrieval.hpp"

namespace httplib {
class Server;
}

namespace simviz {

struct ServiceOptions {
  std::size_t cache_capacity = 1024;  // 0 disables the map cache
  std::optional<std::filesystem::path> static_dir;
  render::RenderOptions render;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// LRU cache of similarity maps keyed by (subject id, other id).
class MapCache {
 public:
  explicit MapCache(std::size_t capacity) : capacity_(capacity) {}

  std::optional<SimilarityMap> get(const std::string& key);
  void put(const std::string& key, const SimilarityMap& m);
  std::size_t size() const;
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  using Entry = std::pair<std::string, SimilarityMap>;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> order_;  // most recent first
  std::unordered_map<std::string, std::list<Entry>::iterator> slots_;
};

using QueryParams = std::map<std::string, std::string, std::less<>>;

class Service {
 public:
  Service(EmbeddingIndex index, ServiceOptions opts = {});

  const EmbeddingIndex& index() const noexcept { return index_; }
  const MapCache& cache() const noexcept { return cache_; }

  Response images() const;
  Response image(std::string_view id) const;
  Response search(std::string_view body) const;
  Response map(const QueryParams& params) const;
  Response classmap(std::string_view id, const QueryParams& params) const;

  /// Registers all routes (and the static mount, if configured) on `server`.
  void mount(httplib::Server& server) const;

 private:
  SimilarityMap cached_map(const std::string& subject, const std::string& other) const;

  EmbeddingIndex index_;
  ServiceOptions opts_;
  mutable MapCache cache_;
};

/// Runs a Service on its own thread; stops and joins on destruction.
class BackgroundServer {
 public:
  /// port 0 picks a free port.
  BackgroundServer(const Service& service, const std::string& host = "127.0.0.1", int port = 0);
  ~BackgroundServer();
  BackgroundServer(const BackgroundServer&) = delete;
  BackgroundServer& operator=(const BackgroundServer&) = delete;

  int port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

/// Blocks serving until the process is stopped.
void serve(const Service& service, const std::string& host, int port);

std::string url_encode(std::string_view s);

}  // namespace simviz

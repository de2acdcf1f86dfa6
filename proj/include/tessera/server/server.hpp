#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "tessera/pipeline/pipeline.hpp"
#include "tessera/pipeline/registry.hpp"

namespace httplib {
class Server;
}

namespace tessera::server {

using pipeline::ConfigError;

/// A pipeline to build: language plus requested processors (empty = all).
struct PipelineKey {
  std::string language;
  std::vector<std::string> processors;

  /// "fr" or "fr:tokenize,pos".
  static PipelineKey parse(const std::string& spec);
  std::string to_string() const;
};

struct Options {
  std::string host = "127.0.0.1";
  int port = 9000;  // 0 picks a free port
  std::size_t max_text_bytes = 1 << 20;
  int timeout_ms = 60000;  // per annotation; 0 disables
  std::size_t cache_size = 4;
  std::chrono::milliseconds drain_timeout{10000};
  std::vector<PipelineKey> preload;
};

using Loader = std::function<std::shared_ptr<const pipeline::Pipeline>(const PipelineKey&)>;

/// Loader that builds pipelines from a model registry.
Loader registry_loader(pipeline::Registry registry);

/// HTTP front end for the pipeline: POST /annotate, GET /health.
///
/// /health is 503 until every preload pipeline has loaded, then 200.
/// Pipelines are cached per key, LRU by count; no lock is held while one
/// annotates.
class AnnotationServer {
 public:
  AnnotationServer(Options options, Loader loader);
  ~AnnotationServer();

  /// Binds the listening socket and returns the port.
  int bind();
  /// Starts preloading in the background and serves until shutdown().
  /// Requires bind().
  void serve();
  /// Refuses new requests, waits for in-flight ones (up to the drain
  /// timeout) and stops serving. Safe to call from any thread, repeatedly.
  void shutdown();

  bool ready() const { return ready_; }
  bool running() const;
  /// Keys of the cached pipelines, most recently used first.
  std::vector<std::string> loaded() const;

 private:
  struct Response {
    int status;
    std::string body;
  };
  Response annotate(const std::string& body);
  Response health() const;
  std::shared_ptr<const pipeline::Pipeline> pipeline_for(const PipelineKey& key);
  void preload();

  Options options_;
  Loader loader_;
  std::unique_ptr<httplib::Server> http_;
  std::chrono::steady_clock::time_point started_;
  std::thread preloader_;

  std::atomic<bool> ready_{false};
  std::atomic<bool> draining_{false};
  std::atomic<int> in_flight_{0};
  std::string preload_error_;  // guarded by mutex_

  mutable std::mutex mutex_;
  std::list<std::string> lru_;  // most recent first
  std::map<std::string, std::pair<std::shared_ptr<const pipeline::Pipeline>, std::list<std::string>::iterator>> cache_;
};

}  // namespace tessera::server

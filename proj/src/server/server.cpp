#include "tessera/server/server.hpp"

#include <future>

#include "httplib.h"
#include "tessera/error.hpp"
#include "tessera/pipeline/wire.hpp"

namespace tessera::server {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

std::string error_body(const std::string& message) { return json{{"error", message}}.dump(); }

// RAII in-flight counter.
class InFlight {
 public:
  explicit InFlight(std::atomic<int>& n) : n_(n) { ++n_; }
  ~InFlight() { --n_; }
  InFlight(const InFlight&) = delete;
  InFlight& operator=(const InFlight&) = delete;

 private:
  std::atomic<int>& n_;
};

}  // namespace

PipelineKey PipelineKey::parse(const std::string& spec) {
  PipelineKey k;
  const auto colon = spec.find(':');
  k.language = spec.substr(0, colon);
  if (k.language.empty()) throw ConfigError("pipeline spec '" + spec + "' has no language");
  if (colon != std::string::npos) k.processors = pipeline::split_processors(spec.substr(colon + 1));
  return k;
}

std::string PipelineKey::to_string() const {
  return processors.empty() ? language : language + ":" + pipeline::join(processors);
}

Loader registry_loader(pipeline::Registry registry) {
  return [registry = std::move(registry)](const PipelineKey& key) {
    pipeline::PipelineConfig config;
    config.language = key.language;
    config.processors = key.processors;
    return std::make_shared<const pipeline::Pipeline>(pipeline::Pipeline::build(config, registry));
  };
}

AnnotationServer::AnnotationServer(Options options, Loader loader)
    : options_(std::move(options)), loader_(std::move(loader)), http_(std::make_unique<httplib::Server>()) {
  // Room for JSON escaping of a maximal text.
  http_->set_payload_max_length(options_.max_text_bytes * 6 + (64 << 10));
  http_->Post("/annotate", [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = annotate(req.body);
    res.status = r.status;
    res.set_content(r.body, kJson);
  });
  http_->Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    const Response r = health();
    res.status = r.status;
    res.set_content(r.body, kJson);
  });
}

AnnotationServer::~AnnotationServer() {
  if (running()) http_->stop();
  if (preloader_.joinable()) preloader_.join();
}

int AnnotationServer::bind() {
  if (options_.port == 0) {
    const int port = http_->bind_to_any_port(options_.host);
    if (port < 0) throw Error("cannot bind " + options_.host);
    options_.port = port;
  } else if (!http_->bind_to_port(options_.host, options_.port)) {
    throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  return options_.port;
}

void AnnotationServer::serve() {
  started_ = std::chrono::steady_clock::now();
  preloader_ = std::thread([this] { preload(); });
  http_->listen_after_bind();
}

bool AnnotationServer::running() const { return http_->is_running(); }

void AnnotationServer::shutdown() {
  draining_ = true;
  const auto deadline = std::chrono::steady_clock::now() + options_.drain_timeout;
  while (in_flight_ > 0 && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  http_->stop();
  // stop() only signals the listener; wait for it to leave its loop.
  for (int i = 0; i < 200 && http_->is_running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
}

void AnnotationServer::preload() {
  try {
    for (const auto& key : options_.preload) pipeline_for(key);
    ready_ = true;
  } catch (const std::exception& e) {
    std::lock_guard lock(mutex_);
    preload_error_ = e.what();
  }
}

std::vector<std::string> AnnotationServer::loaded() const {
  std::lock_guard lock(mutex_);
  return {lru_.begin(), lru_.end()};
}

std::shared_ptr<const pipeline::Pipeline> AnnotationServer::pipeline_for(const PipelineKey& key) {
  const std::string name = key.to_string();
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(name); it != cache_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.second);
      return it->second.first;
    }
  }
  // Built outside the lock; a concurrent build of the same key loses.
  auto built = loader_(key);
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(name); it != cache_.end()) return it->second.first;
  lru_.push_front(name);
  cache_[name] = {built, lru_.begin()};
  while (cache_.size() > std::max<std::size_t>(1, options_.cache_size)) {
    cache_.erase(lru_.back());
    lru_.pop_back();
  }
  return built;
}

AnnotationServer::Response AnnotationServer::health() const {
  const auto uptime = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - started_);
  json body{{"status", ready_ ? "ok" : "loading"}, {"models", loaded()}, {"uptime_s", uptime.count()}};
  {
    std::lock_guard lock(mutex_);
    if (!preload_error_.empty()) {
      body["status"] = "error";
      body["error"] = preload_error_;
    }
  }
  if (draining_) body["status"] = "stopping";
  return {ready_ && !draining_ ? 200 : 503, body.dump()};
}

AnnotationServer::Response AnnotationServer::annotate(const std::string& body) {
  InFlight guard(in_flight_);
  if (draining_) return {503, error_body("server is shutting down")};
  if (!ready_) return {503, error_body("models are loading")};

  json request;
  try {
    request = json::parse(body);
  } catch (const json::exception& e) {
    return {400, error_body(std::string("request is not valid JSON: ") + e.what())};
  }
  if (!request.is_object()) return {400, error_body("request must be a JSON object")};
  static const std::vector<std::string> kFields = {"text", "language", "processors", "format"};
  for (const auto& [field, value] : request.items()) {
    if (std::find(kFields.begin(), kFields.end(), field) == kFields.end()) {
      return {400, error_body("unknown field '" + field + "'; allowed fields: " + pipeline::join(kFields, ", "))};
    }
  }
  if (!request.contains("text") || !request["text"].is_string()) return {400, error_body("'text' must be a string")};
  if (!request.contains("language") || !request["language"].is_string() ||
      request["language"].get<std::string>().empty()) {
    return {400, error_body("'language' must be a non-empty string")};
  }
  if (request.contains("format") && request["format"] != "json") {
    return {400, error_body("unsupported format " + request["format"].dump() + "; only \"json\" is available")};
  }
  PipelineKey key;
  key.language = request["language"].get<std::string>();
  if (request.contains("processors")) {
    const json& p = request["processors"];
    if (p.is_string()) {
      key.processors = pipeline::split_processors(p.get<std::string>());
    } else if (p.is_array() && std::all_of(p.begin(), p.end(), [](const json& x) { return x.is_string(); })) {
      key.processors = p.get<std::vector<std::string>>();
    } else {
      return {400, error_body("'processors' must be a list of names or a comma-separated string")};
    }
  }
  const std::string text = request["text"].get<std::string>();
  if (text.size() > options_.max_text_bytes) {
    return {413, error_body("text is " + std::to_string(text.size()) + " bytes; the limit is " +
                            std::to_string(options_.max_text_bytes))};
  }

  std::shared_ptr<const pipeline::Pipeline> pipe;
  try {
    if (!key.processors.empty()) pipeline::resolve_processors(key.processors, false);
    pipe = pipeline_for(key);
  } catch (const ConfigError& e) {
    return {400, error_body(e.what())};
  } catch (const pipeline::ModelUnavailable& e) {
    return {404, error_body(e.what())};
  } catch (const std::exception& e) {
    return {500, error_body(std::string("loading models failed: ") + e.what())};
  }

  // The annotation runs on its own thread so a slow request can time out;
  // the thread keeps the pipeline alive until it finishes.
  auto task = std::make_shared<std::packaged_task<std::string()>>(
      [pipe, text] { return wire::canonical(wire::to_json(pipe->run(text))); });
  auto result = task->get_future();
  std::thread([task] { (*task)(); }).detach();
  if (options_.timeout_ms > 0 &&
      result.wait_for(std::chrono::milliseconds(options_.timeout_ms)) == std::future_status::timeout) {
    return {504, error_body("annotation exceeded " + std::to_string(options_.timeout_ms) + " ms")};
  }
  try {
    return {200, result.get()};
  } catch (const std::exception& e) {
    return {500, error_body(std::string("annotation failed: ") + e.what())};
  }
}

}  // namespace tessera::server

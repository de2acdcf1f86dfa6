#include <condition_variable>
#include <future>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "support/fixtures.hpp"
#include "support/toy_models.hpp"
#include "tessera/pipeline/wire.hpp"
#include "tessera/server/server.hpp"

using namespace tessera;
using namespace tessera::server;
using nlohmann::json;

namespace {

std::shared_ptr<const pipeline::Pipeline> toy_pipeline(const std::vector<std::string>& processors = {}) {
  static const pipeline::Registry reg = [] {
    pipeline::Registry r(testing::scratch_dir("server_registry"));
    r.fetch("fr", testing::toy_model_dir().string());
    return r;
  }();
  pipeline::PipelineConfig c;
  c.language = "fr";
  c.processors = processors;
  return std::make_shared<const pipeline::Pipeline>(pipeline::Pipeline::build(c, reg));
}

// Runs a server on a free port for the lifetime of the object.
class Running {
 public:
  Running(Options options, Loader loader) : server_(std::move(options), std::move(loader)) {
    port_ = server_.bind();
    thread_ = std::thread([this] { server_.serve(); });
    for (int i = 0; i < 500 && !server_.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  ~Running() {
    server_.shutdown();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60);
    return c;
  }
  AnnotationServer& server() { return server_; }

 private:
  AnnotationServer server_;
  int port_ = 0;
  std::thread thread_;
};

Options options() {
  Options o;
  o.port = 0;
  return o;
}

Loader toy_loader() {
  return [](const PipelineKey& key) {
    if (key.language != "fr") throw pipeline::ModelUnavailable("no models for " + key.language);
    return toy_pipeline(key.processors);
  };
}

httplib::Result post(const httplib::Client& cc, const json& body) {
  auto& c = const_cast<httplib::Client&>(cc);
  return c.Post("/annotate", body.dump(), "application/json");
}

}  // namespace

TEST_CASE("pipeline keys") {
  CHECK(PipelineKey::parse("fr").processors.empty());
  const auto k = PipelineKey::parse("fr:tokenize, pos");
  CHECK(k.language == "fr");
  CHECK(k.processors == std::vector<std::string>{"tokenize", "pos"});
  CHECK(k.to_string() == "fr:tokenize,pos");
  CHECK_THROWS_AS(PipelineKey::parse(":tokenize"), ConfigError);
}

TEST_CASE("health is 503 until preloaded models finish loading") {
  std::mutex m;
  std::condition_variable cv;
  bool release = false;
  Options o = options();
  o.preload = {PipelineKey::parse("fr")};
  Running r(o, [&](const PipelineKey& key) {
    std::unique_lock lock(m);
    cv.wait(lock, [&] { return release; });
    return toy_pipeline(key.processors);
  });
  auto c = r.client();
  auto h = c.Get("/health");
  REQUIRE(h);
  CHECK(h->status == 503);
  CHECK(json::parse(h->body)["status"] == "loading");
  auto a = post(c, {{"text", "Le chat dort."}, {"language", "fr"}});
  REQUIRE(a);
  CHECK(a->status == 503);
  {
    std::lock_guard lock(m);
    release = true;
  }
  cv.notify_all();
  for (int i = 0; i < 500 && !r.server().ready(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(2));
  h = c.Get("/health");
  REQUIRE(h);
  CHECK(h->status == 200);
  const auto body = json::parse(h->body);
  CHECK(body["status"] == "ok");
  CHECK(body["models"] == json::array({"fr"}));
  CHECK(body["uptime_s"].is_number_integer());
}

TEST_CASE("failed preload keeps health unavailable and reports the error") {
  Options o = options();
  o.preload = {PipelineKey::parse("xx")};
  Running r(o, toy_loader());
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  auto h = r.client().Get("/health");
  REQUIRE(h);
  CHECK(h->status == 503);
  CHECK(json::parse(h->body)["status"] == "error");
}

TEST_CASE("annotate matches the in-process pipeline") {
  Running r(options(), toy_loader());
  auto c = r.client();
  const auto corpus = testing::toy_corpus();
  const auto local = toy_pipeline();
  for (const auto& doc : corpus) {
    auto res = post(c, {{"text", doc.text}, {"language", "fr"}});
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body == wire::canonical(wire::to_json(local->run(doc.text))));
  }
  auto partial = post(c, {{"text", corpus[0].text}, {"language", "fr"}, {"processors", {"tokenize", "ner"}}});
  REQUIRE(partial);
  CHECK(partial->body == wire::canonical(wire::to_json(toy_pipeline({"tokenize", "ner"})->run(corpus[0].text))));
  auto as_string = post(c, {{"text", corpus[0].text}, {"language", "fr"}, {"processors", "tokenize,ner"}});
  REQUIRE(as_string);
  CHECK(as_string->body == partial->body);

  auto empty = post(c, {{"text", ""}, {"language", "fr"}, {"format", "json"}});
  REQUIRE(empty);
  CHECK(empty->status == 200);
  CHECK(json::parse(empty->body)["sentences"].empty());
}

TEST_CASE("annotate rejects bad requests") {
  Options o = options();
  o.max_text_bytes = 100;
  Running r(o, toy_loader());
  auto c = r.client();
  auto status = [&](const json& body) { return post(c, body)->status; };

  auto coref = post(c, {{"text", "x"}, {"language", "fr"}, {"processors", {"tokenize", "coref"}}});
  CHECK(coref->status == 400);
  CHECK(coref->body.find("tokenize, mwt, pos, lemma, depparse, ner") != std::string::npos);
  CHECK(status({{"text", "x"}, {"language", "fr"}, {"processors", {"depparse"}}}) == 400);
  CHECK(status({{"text", "x"}, {"language", "fr"}, {"colour", "blue"}}) == 400);
  CHECK(status({{"text", "x"}}) == 400);
  CHECK(status({{"text", 3}, {"language", "fr"}}) == 400);
  CHECK(status({{"text", "x"}, {"language", "fr"}, {"format", "xml"}}) == 400);
  CHECK(status({{"text", "x"}, {"language", "fr"}, {"processors", 7}}) == 400);
  CHECK(status(json::array()) == 400);
  CHECK(c.Post("/annotate", "{not json", "application/json")->status == 400);
  CHECK(status({{"text", std::string(101, 'a')}, {"language", "fr"}}) == 413);
  CHECK(status({{"text", std::string(100, 'a')}, {"language", "fr"}}) == 200);
  CHECK(status({{"text", "x"}, {"language", "xx"}}) == 404);
}

TEST_CASE("parallel identical requests return identical bodies") {
  Running r(options(), toy_loader());
  const std::string text = testing::toy_corpus()[1].text;
  std::vector<std::future<std::string>> results;
  for (int i = 0; i < 8; ++i) {
    results.push_back(std::async(std::launch::async, [&] {
      auto c = r.client();
      auto res = post(c, {{"text", text}, {"language", "fr"}});
      return res && res->status == 200 ? res->body : std::string("failed");
    }));
  }
  const std::string first = results[0].get();
  CHECK(first != "failed");
  for (std::size_t i = 1; i < results.size(); ++i) CHECK(results[i].get() == first);
}

TEST_CASE("pipeline cache evicts the least recently used key") {
  Options o = options();
  o.cache_size = 2;
  Running r(o, toy_loader());
  auto c = r.client();
  for (const char* procs : {"tokenize", "tokenize,ner", "tokenize"}) {
    REQUIRE(post(c, {{"text", "a"}, {"language", "fr"}, {"processors", procs}})->status == 200);
  }
  CHECK(r.server().loaded() == std::vector<std::string>{"fr:tokenize", "fr:tokenize,ner"});
  REQUIRE(post(c, {{"text", "a"}, {"language", "fr"}, {"processors", "tokenize,mwt"}})->status == 200);
  CHECK(r.server().loaded() == std::vector<std::string>{"fr:tokenize,mwt", "fr:tokenize"});
}

TEST_CASE("slow annotations time out") {
  Options o = options();
  o.timeout_ms = 1;
  Running r(o, toy_loader());
  std::string text;
  for (int i = 0; i < 40; ++i) text += testing::toy_corpus()[0].text + " ";
  auto res = post(r.client(), {{"text", text}, {"language", "fr"}});
  REQUIRE(res);
  CHECK(res->status == 504);
}

TEST_CASE("shutdown drains in-flight requests and refuses new ones") {
  std::promise<void> loading;
  std::promise<void> release;
  auto released = release.get_future().share();
  Running* server = nullptr;
  Running r(options(), [&](const PipelineKey& key) {
    loading.set_value();
    released.wait();
    return toy_pipeline(key.processors);
  });
  server = &r;
  auto in_flight = std::async(std::launch::async, [&] {
    auto res = post(server->client(), {{"text", "Le chat dort."}, {"language", "fr"}});
    return res ? res->status : -1;
  });
  loading.get_future().wait();
  auto stopping = std::async(std::launch::async, [&] { server->server().shutdown(); });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  // Still draining: the in-flight request holds shutdown back.
  CHECK(stopping.wait_for(std::chrono::milliseconds(0)) == std::future_status::timeout);
  auto refused = post(server->client(), {{"text", "x"}, {"language", "fr"}});
  REQUIRE(refused);
  CHECK(refused->status == 503);
  release.set_value();
  CHECK(in_flight.get() == 200);
  stopping.get();
  CHECK_FALSE(server->server().running());
}

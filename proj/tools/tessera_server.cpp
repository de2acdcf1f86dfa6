// Annotation server. SIGINT/SIGTERM drain in-flight requests, then exit 0.

#include <csignal>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "tessera/server/server.hpp"

using namespace tessera;

int main(int argc, char** argv) {
  CLI::App app{"tessera-server: HTTP annotation service"};
  server::Options options;
  std::string registry_root;
  std::vector<std::string> preload;
  std::int64_t drain_ms = options.drain_timeout.count();
  app.add_option("--host", options.host, "Listen address")->capture_default_str();
  app.add_option("--port", options.port, "Listen port (0 picks a free one)")->capture_default_str();
  app.add_option("--registry", registry_root, "Model registry root (default $TESSERA_MODELS or ./tessera_models)");
  app.add_option("--preload", preload, "Pipelines to load before reporting healthy, as lang or lang:proc1,proc2");
  app.add_option("--max-text-bytes", options.max_text_bytes, "Largest accepted text")->capture_default_str();
  app.add_option("--timeout-ms", options.timeout_ms, "Per-request annotation timeout, 0 for none")->capture_default_str();
  app.add_option("--cache-size", options.cache_size, "Pipelines kept loaded")->capture_default_str();
  app.add_option("--drain-timeout-ms", drain_ms, "Shutdown grace period")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& p : preload) options.preload.push_back(server::PipelineKey::parse(p));
    options.drain_timeout = std::chrono::milliseconds(drain_ms);
    const pipeline::Registry registry(registry_root.empty() ? pipeline::Registry::default_root() : std::filesystem::path(registry_root));

    // Signals are blocked in every thread and taken synchronously by one.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    server::AnnotationServer srv(options, server::registry_loader(registry));
    const int port = srv.bind();
    std::thread waiter([&] {
      int sig = 0;
      sigwait(&signals, &sig);
      std::cerr << "signal " << sig << ", draining\n";
      srv.shutdown();
    });
    std::cerr << "listening on " << options.host << ":" << port << "\n";
    srv.serve();
    // serve() also returns if the listener fails; release the waiter then.
    if (waiter.joinable()) {
      pthread_kill(waiter.native_handle(), SIGTERM);
      waiter.join();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

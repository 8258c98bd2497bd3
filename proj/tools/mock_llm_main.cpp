// Formula-faithful chat-completions mock: answers every gradient request
// with the exact X (X^T w - y), so the llm backend can be driven end to end
// without a remote endpoint.

#include <csignal>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "a2a/mock_llm.hpp"

namespace {
std::atomic<bool> stop_requested{false};
void handle_signal(int) { stop_requested.store(true); }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"formula-faithful mock chat-completions endpoint"};
  int port = 8931;
  std::string mode = "sum";
  app.add_option("--port", port, "Port to listen on (127.0.0.1)");
  app.add_option("--loss-mode", mode, "Gradient convention: mean | sum")
      ->check(CLI::IsMember({"mean", "sum"}));
  CLI11_PARSE(app, argc, argv);

  a2a::MockLlmServer::Options opts;
  opts.port = port;
  opts.loss_mode = a2a::loss_mode_from_string(mode);
  try {
    a2a::MockLlmServer server(opts);
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    std::cout << "serving " << server.base_url() << "/chat/completions (" << mode
              << " mode); Ctrl-C to stop\n";
    while (!stop_requested.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}

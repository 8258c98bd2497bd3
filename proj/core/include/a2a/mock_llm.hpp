#pragma once

#include <memory>
#include <string>

#include "a2a/lsa.hpp"

namespace a2a {

/// Local chat-completions endpoint that parses X, y, w_current out of the
/// user message and answers with the exact regression gradient. Used to
/// validate the bridge protocol end-to-end without a commercial endpoint;
/// also supports injecting shape/HTTP failures to exercise the retry paths.
class MockLlmServer {
 public:
  struct Options {
    LossMode loss_mode = LossMode::Sum;
    int fail_shape_times = 0;  // first k requests answer with a wrong-length vector
    int fail_http_times = 0;   // first k requests answer HTTP 500
    int port = 0;              // 0 = pick any free port
  };

  MockLlmServer();
  explicit MockLlmServer(Options opts);
  ~MockLlmServer();

  MockLlmServer(const MockLlmServer&) = delete;
  MockLlmServer& operator=(const MockLlmServer&) = delete;

  int port() const;
  std::string base_url() const;  // http://127.0.0.1:<port>/v1
  int request_count() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace a2a

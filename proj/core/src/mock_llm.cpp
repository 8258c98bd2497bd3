#include "a2a/mock_llm.hpp"

#include <atomic>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace a2a {

using nlohmann::json;

namespace {

// Pulls the JSON array literal following "<name> = " out of the user text.
json parse_field(const std::string& text, const std::string& name) {
  const std::string marker = name + " = ";
  const auto pos = text.find(marker);
  if (pos == std::string::npos)
    throw std::runtime_error("mock: user message lacks field " + name);
  const auto eol = text.find('\n', pos);
  const std::string literal =
      text.substr(pos + marker.size(),
                  eol == std::string::npos ? std::string::npos : eol - pos - marker.size());
  return json::parse(literal);
}

std::string full_precision(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

}  // namespace

struct MockLlmServer::Impl {
  Options opts;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> requests{0};
  std::atomic<int> shape_failures_left;
  std::atomic<int> http_failures_left;

  explicit Impl(Options options)
      : opts(options),
        shape_failures_left(options.fail_shape_times),
        http_failures_left(options.fail_http_times) {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                               httplib::Response& res) {
      requests.fetch_add(1);
      if (http_failures_left.fetch_sub(1) > 0) {
        res.status = 500;
        res.set_content(R"({"error":"injected failure"})", "application/json");
        return;
      }
      http_failures_left.fetch_add(1);
      try {
        const json body = json::parse(req.body);
        const std::string user =
            body.at("messages").at(1).at("content").get<std::string>();
        const json Xj = parse_field(user, "X");
        const json yj = parse_field(user, "y");
        const json wj = parse_field(user, "w_current");

        const int d = static_cast<int>(Xj.size());
        const int n = static_cast<int>(Xj.at(0).size());
        Mat X(d, n);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < n; ++j) X(i, j) = Xj.at(i).at(j).get<double>();
        Vec y(n), w(d);
        for (int j = 0; j < n; ++j) y[j] = yj.at(j).get<double>();
        for (int i = 0; i < d; ++i) w[i] = wj.at(i).get<double>();

        Vec g = X * (X.transpose() * w - y);
        if (opts.loss_mode == LossMode::Mean) g /= double(n);

        int out_len = d;
        if (shape_failures_left.fetch_sub(1) > 0) {
          out_len = d + 1;  // deliberately wrong shape
        } else {
          shape_failures_left.fetch_add(1);
        }
        std::string grad = "[";
        for (int i = 0; i < out_len; ++i) {
          if (i) grad += ", ";
          grad += full_precision(i < d ? g[i] : 0.0);
        }
        grad += "]";
        const std::string content =
            std::string(R"json({"thinking": "computed X(X^T w - y)", "gradient_next": )json") +
            grad + "}";
        json reply = {
            {"id", "mock"},
            {"object", "chat.completion"},
            {"choices",
             json::array({json{{"index", 0},
                               {"message", json{{"role", "assistant"}, {"content", content}}},
                               {"finish_reason", "stop"}}})},
        };
        res.set_content(reply.dump(), "application/json");
      } catch (const std::exception& ex) {
        res.status = 400;
        res.set_content(std::string(R"({"error":")") + ex.what() + "\"}",
                        "application/json");
      }
    });

    if (opts.port > 0) {
      if (!server.bind_to_port("127.0.0.1", opts.port))
        throw std::runtime_error("mock server: cannot bind port " +
                                 std::to_string(opts.port));
      port = opts.port;
    } else {
      port = server.bind_to_any_port("127.0.0.1");
      if (port <= 0) throw std::runtime_error("mock server: cannot bind a port");
    }
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~Impl() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
};

MockLlmServer::MockLlmServer() : MockLlmServer(Options{}) {}

MockLlmServer::MockLlmServer(Options opts) : impl_(std::make_unique<Impl>(opts)) {}

MockLlmServer::~MockLlmServer() = default;

int MockLlmServer::port() const { return impl_->port; }

std::string MockLlmServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port) + "/v1";
}

int MockLlmServer::request_count() const { return impl_->requests.load(); }

void MockLlmServer::stop() { impl_->server.stop(); }

}  // namespace a2a

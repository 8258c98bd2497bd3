#include "a2a/llm_bridge.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "a2a/errors.hpp"

namespace a2a {

using nlohmann::json;

std::string wire_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::string(buf);
}

namespace {

std::string wire_vector(const Vec& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += wire_number(v[i]);
  }
  return out + "]";
}

std::string wire_matrix_rows(const Mat& m) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += ", ";
    out += wire_vector(m.row(i).transpose());
  }
  return out + "]";
}

std::string substitute(std::string text, const std::string& key, const std::string& value) {
  std::string::size_type pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

constexpr const char* kSystemTemplate = R"(You are an expert optimization agent working on linear regression gradient descent.

PROBLEM SETUP:
- Input features X: {d}x{n} matrix (values provided in each request)
- Target values y: {n}-dimensional vector (values provided in each request)
- Current weight w: {d}-dimensional vector (what you'll receive)

TASK: Calculate the gradient \Delta L with respect to w, where L = ||X^T w - y||^2

FORMULA: \Delta L = X(X^T w - y)
- X^T w produces an {n}-dimensional vector (predictions)
- X^T w - y produces an {n}-dimensional vector (residuals)
- X @ (residuals) produces a {d}-dimensional vector (gradient)

CRITICAL:
1. Use the EXACT X and y matrices provided in each request
2. Your output gradient must be exactly {d}-dimensional
3. Do NOT make up dummy data - use the actual matrices given
4. Perform the calculation step by step

The user will provide w_current and the matrices X, y. Calculate and return the {d}-dimensional gradient vector, do not ask the user to validate what is to be done. The user will not be able to interact with you. Be highly precise and accurate on your computations, you will be evaluated on the distance with the ground truth gradient.)";

}  // namespace

Prompts render_prompts(int d, int n, const TaskData& task, const Vec& w_current,
                       const std::vector<Vec>& history) {
  if (task.X.rows() != d || task.X.cols() != n || task.y.size() != n ||
      w_current.size() != d)
    throw std::invalid_argument("render_prompts: shape mismatch");
  for (const Vec& w : history)
    if (w.size() != d) throw std::invalid_argument("render_prompts: history entry dim != d");

  Prompts p;
  p.system = substitute(substitute(kSystemTemplate, "{d}", std::to_string(d)), "{n}",
                        std::to_string(n));

  std::ostringstream user;
  user << "X = " << wire_matrix_rows(task.X) << "\n";
  user << "y = " << wire_vector(task.y) << "\n";
  user << "w_current = " << wire_vector(w_current) << "\n";
  user << "history = [";
  for (std::size_t k = 0; k < history.size(); ++k) {
    if (k) user << ", ";
    user << wire_vector(history[k]);
  }
  user << "]\n";
  user << "\nReturn a JSON object with keys \"thinking\" and \"gradient_next\" (exactly "
       << d << " floats).";
  p.user = user.str();
  return p;
}

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix, may be empty
};

ParsedUrl parse_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("base_url must start with http:// or https://: " + base_url);
  const auto path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl u;
  if (path_start == std::string::npos) {
    u.origin = base_url;
  } else {
    u.origin = base_url.substr(0, path_start);
    u.prefix = base_url.substr(path_start);
  }
  while (!u.prefix.empty() && u.prefix.back() == '/') u.prefix.pop_back();
  return u;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      now.time_since_epoch()) %
                  1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min,
                tm.tm_sec, int(ms.count()));
  return std::string(buf);
}

// Process-wide token bucket per endpoint origin so concurrent callers share
// one request budget.
class TokenBucket {
 public:
  explicit TokenBucket(double rps) : rps_(rps), tokens_(rps > 0 ? rps : 0) {}

  void acquire() {
    if (rps_ <= 0) return;
    std::unique_lock lock(mu_);
    for (;;) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rps_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

 private:
  void refill() {
    const auto now = std::chrono::steady_clock::now();
    const double dt = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(std::max(rps_, 1.0), tokens_ + dt * rps_);
  }

  double rps_;
  double tokens_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  std::mutex mu_;
};

std::shared_ptr<TokenBucket> bucket_for(const std::string& origin, double rps) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<TokenBucket>> buckets;
  std::scoped_lock lock(mu);
  auto it = buckets.find(origin);
  if (it == buckets.end())
    it = buckets.emplace(origin, std::make_shared<TokenBucket>(rps)).first;
  return it->second;
}

// Bounded concurrency per endpoint origin.
class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(int slots) : slots_(std::max(1, slots)) {}
  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_use_ < slots_; });
    ++in_use_;
  }
  void release() {
    std::scoped_lock lock(mu_);
    --in_use_;
    cv_.notify_one();
  }

 private:
  int slots_;
  int in_use_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
};

std::shared_ptr<ConcurrencyGate> gate_for(const std::string& origin, int slots) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<ConcurrencyGate>> gates;
  std::scoped_lock lock(mu);
  auto it = gates.find(origin);
  if (it == gates.end())
    it = gates.emplace(origin, std::make_shared<ConcurrencyGate>(slots)).first;
  return it->second;
}

}  // namespace

struct LlmBackend::Session {
  EndpointConfig cfg;
  ParsedUrl url;
  std::unique_ptr<httplib::Client> client;
  std::shared_ptr<TokenBucket> bucket;
  std::shared_ptr<ConcurrencyGate> gate;
  std::string api_key;
  std::mutex transcript_mu;

  explicit Session(EndpointConfig config) : cfg(std::move(config)), url(parse_base_url(cfg.base_url)) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (url.origin.rfind("https://", 0) == 0)
      throw TransportError("https endpoints need an OpenSSL-enabled build");
#endif
    client = std::make_unique<httplib::Client>(url.origin);
    const auto timeout = std::chrono::duration<double>(cfg.timeout_seconds);
    client->set_connection_timeout(timeout);
    client->set_read_timeout(timeout);
    client->set_write_timeout(timeout);
    bucket = bucket_for(url.origin, cfg.requests_per_second);
    gate = gate_for(url.origin, cfg.max_concurrent);
    if (!cfg.api_key_env.empty()) {
      const char* key = std::getenv(cfg.api_key_env.c_str());
      if (!key)
        throw ConfigError("API key environment variable '" + cfg.api_key_env +
                          "' is not set");
      api_key = key;
    }
  }

  void log_attempt(int attempt, const json& payload, int status, const std::string& body,
                   const std::string& note) {
    if (cfg.transcript_path.empty()) return;
    json rec;
    rec["timestamp"] = utc_timestamp();
    rec["attempt"] = attempt;
    rec["payload"] = payload;
    rec["status"] = status;
    rec["response"] = body;
    if (!note.empty()) rec["note"] = note;
    std::scoped_lock lock(transcript_mu);
    std::ofstream out(cfg.transcript_path, std::ios::app);
    out << rec.dump() << "\n";
  }

  json build_payload(const Prompts& prompts, int d) const {
    json schema = {
        {"type", "object"},
        {"properties",
         {{"thinking", {{"type", "string"}}},
          {"gradient_next",
           {{"type", "array"},
            {"items", {{"type", "number"}}},
            {"minItems", d},
            {"maxItems", d}}}}},
        {"required", json::array({"thinking", "gradient_next"})},
        {"additionalProperties", false},
    };
    json payload = {
        {"model", cfg.model_name},
        {"messages",
         json::array({json{{"role", "system"}, {"content", prompts.system}},
                      json{{"role", "user"}, {"content", prompts.user}}})},
        {"temperature", cfg.temperature},
        {"top_p", cfg.top_p},
        {"response_format",
         {{"type", "json_schema"},
          {"json_schema",
           {{"name", "gradient_response"}, {"strict", true}, {"schema", schema}}}}},
    };
    if (cfg.reasoning_effort) payload["reasoning_effort"] = *cfg.reasoning_effort;
    if (cfg.frequency_penalty) payload["frequency_penalty"] = *cfg.frequency_penalty;
    if (cfg.presence_penalty) payload["presence_penalty"] = *cfg.presence_penalty;
    return payload;
  }

  GradientResponse request(const Prompts& prompts, int d) {
    if (cfg.max_retries < 1) throw ConfigError("max_retries must be >= 1");
    const json payload = build_payload(prompts, d);
    const std::string body = payload.dump();
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    std::string last_body;
    std::string last_error;
    for (int attempt = 1; attempt <= cfg.max_retries; ++attempt) {
      bucket->acquire();
      gate->acquire();
      auto res = client->Post(url.prefix + "/chat/completions", headers, body,
                              "application/json");
      gate->release();
      if (!res) {
        log_attempt(attempt, payload, -1, "", httplib::to_string(res.error()));
        throw TransportError("transport failure talking to " + cfg.base_url + ": " +
                             httplib::to_string(res.error()));
      }
      log_attempt(attempt, payload, res->status, res->body, "");
      if (res->status < 200 || res->status >= 300)
        throw HttpStatusError("endpoint returned HTTP " + std::to_string(res->status),
                              res->status, res->body);
      last_body = res->body;
      try {
        const json reply = json::parse(res->body);
        const std::string content =
            reply.at("choices").at(0).at("message").at("content").get<std::string>();
        const json parsed = json::parse(content);
        GradientResponse out;
        out.thinking = parsed.value("thinking", std::string{});
        const auto& arr = parsed.at("gradient_next");
        if (!arr.is_array() || static_cast<int>(arr.size()) != d)
          throw std::runtime_error("gradient_next must be a length-" + std::to_string(d) +
                                   " array");
        out.gradient_next = Vec(d);
        for (int i = 0; i < d; ++i) {
          out.gradient_next[i] = arr.at(i).get<double>();
          if (!std::isfinite(out.gradient_next[i]))
            throw std::runtime_error("gradient_next has a non-finite entry");
        }
        return out;
      } catch (const std::exception& ex) {
        last_error = ex.what();  // parse/shape failure: retry with a fresh request
      }
    }
    throw ParseFailureError("no valid gradient after " + std::to_string(cfg.max_retries) +
                                " attempts (" + last_error + ")",
                            last_body);
  }
};

GradientResponse request_gradient(const EndpointConfig& cfg, const Prompts& prompts, int d) {
  LlmBackend::Session session(cfg);
  return session.request(prompts, d);
}

LlmBackend::LlmBackend(EndpointConfig cfg) : session_(std::make_shared<Session>(std::move(cfg))) {}

LlmBackend::~LlmBackend() = default;

Vec LlmBackend::gradient(const TaskData& task, const std::vector<Vec>& history) {
  if (history.empty()) throw std::invalid_argument("LlmBackend: empty history");
  const int d = static_cast<int>(task.X.rows());
  const int n = static_cast<int>(task.X.cols());
  const std::vector<Vec> prior(history.begin(), history.end() - 1);
  const Prompts prompts = render_prompts(d, n, task, history.back(), prior);
  return session_->request(prompts, d).gradient_next;
}

}  // namespace a2a

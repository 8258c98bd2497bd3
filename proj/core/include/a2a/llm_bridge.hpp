#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "a2a/agents.hpp"
#include "a2a/geometry.hpp"

namespace a2a {

struct EndpointConfig {
  std::string base_url;     // e.g. "http://127.0.0.1:8931/v1"
  std::string model_name;
  std::string api_key_env;  // name of the env var holding the key; empty = no auth header
  double temperature = 0.0;
  double top_p = 1.0;
  int max_retries = 3;      // total attempts on parse/shape failure
  double timeout_seconds = 120.0;
  double requests_per_second = 0.0;  // 0 = unlimited (token bucket otherwise)
  int max_concurrent = 4;
  std::string transcript_path;       // JSONL request/response log; empty = off
  // vendor-specific knobs, sent only when set
  std::optional<std::string> reasoning_effort;
  std::optional<double> frequency_penalty;
  std::optional<double> presence_penalty;
};

struct Prompts {
  std::string system;
  std::string user;
};

/// Renders the system/user message pair for one gradient request. The user
/// message embeds X, y, w_current and the prior history as JSON array
/// literals with 12 significant digits; byte-deterministic given inputs.
Prompts render_prompts(int d, int n, const TaskData& task, const Vec& w_current,
                       const std::vector<Vec>& history);

struct GradientResponse {
  std::string thinking;  // scratchpad, ignored downstream
  Vec gradient_next;     // length d, finite
};

/// One schema-constrained chat-completion call. Validates length/finiteness
/// locally and retries (fresh request) on parse/shape failure, up to
/// cfg.max_retries attempts total. Transport and HTTP failures are not
/// retried; they throw TransportError / HttpStatusError directly.
GradientResponse request_gradient(const EndpointConfig& cfg, const Prompts& prompts, int d);

/// Agent backend speaking the wire protocol above. w_current is the last
/// history entry; the prior history is everything before it.
class LlmBackend final : public AgentBackend {
 public:
  explicit LlmBackend(EndpointConfig cfg);
  ~LlmBackend() override;
  Vec gradient(const TaskData& task, const std::vector<Vec>& history) override;
  std::string name() const override { return "llm"; }

  struct Session;  // opaque; owns the HTTP client, rate limiter and transcript

 private:
  std::shared_ptr<Session> session_;
};

/// Serialize a double with 12 significant digits (the wire precision).
std::string wire_number(double x);

}  // namespace a2a

#pragma once

#include <stdexcept>
#include <string>

namespace a2a {

// CLI exit codes. The harness maps thrown errors onto these.
enum class ExitCode : int {
  Ok = 0,
  ConfigError = 2,
  Divergence = 3,
  BackendFailure = 4,
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Iterate went non-finite or its norm blew past the divergence cap.
struct DivergenceError : std::runtime_error {
  int turn;
  DivergenceError(const std::string& msg, int turn_index)
      : std::runtime_error(msg), turn(turn_index) {}
};

struct BackendError : std::runtime_error {
  int turn;
  explicit BackendError(const std::string& msg, int turn_index = -1)
      : std::runtime_error(msg), turn(turn_index) {}
};

struct NotPsdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// S = S_W + S_U is (numerically) singular: some direction is invisible to
// both agents and the limiting errors are not identified.
struct BlindDirectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// v = S_W * delta = 0: the victim never pushes along the gap, so there is
// nothing to cancel and the spike construction is undefined.
struct BlindAttackError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleAttackError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleAngleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingDivergedError : std::runtime_error {
  int epoch;
  TrainingDivergedError(const std::string& msg, int epoch_index)
      : std::runtime_error(msg), epoch(epoch_index) {}
};

// --- llm-bridge transport/parse failures ---

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HttpStatusError : std::runtime_error {
  int status;
  std::string body;
  HttpStatusError(const std::string& msg, int status_code, std::string body_text)
      : std::runtime_error(msg), status(status_code), body(std::move(body_text)) {}
};

struct ParseFailureError : std::runtime_error {
  std::string last_body;
  ParseFailureError(const std::string& msg, std::string last_raw_body)
      : std::runtime_error(msg), last_body(std::move(last_raw_body)) {}
};

}  // namespace a2a

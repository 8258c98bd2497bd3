#pragma once

#include <memory>
#include <string>
#include <vector>

#include "a2a/dynamics.hpp"
#include "a2a/geometry.hpp"
#include "a2a/lsa.hpp"

namespace a2a {

/// One conversational agent: given its own task and the full shared iterate
/// history, produce a d-vector gradient estimate. The harness owns the step
/// application; backends never mutate the iterate.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual Vec gradient(const TaskData& task, const std::vector<Vec>& history) = 0;
  virtual std::string name() const = 0;
};

Vec oracle_gradient(const TaskData& task, const Vec& w, LossMode loss_mode);

class ExactOracleBackend final : public AgentBackend {
 public:
  explicit ExactOracleBackend(LossMode mode) : mode_(mode) {}
  Vec gradient(const TaskData& task, const std::vector<Vec>& history) override;
  std::string name() const override { return "exact"; }

 private:
  LossMode mode_;
};

class LsaBackend final : public AgentBackend {
 public:
  explicit LsaBackend(LsaParams params) : params_(std::move(params)) {}
  Vec gradient(const TaskData& task, const std::vector<Vec>& history) override;
  std::string name() const override { return "lsa"; }
  const LsaParams& params() const { return params_; }

 private:
  LsaParams params_;
};

struct InteractionOptions {
  double stop_tol = 0.0;        // 0 disables early stopping (fixed step count)
  double divergence_cap = 1e12;
};

/// Model-agnostic alternating interaction: shared iterate starts at zero,
/// a1 speaks first, each half-step applies state <- state - eta * gradient.
/// Error curves are measured against task1.target (after a1's turns) and
/// task2.target (after a2's turns). Backend failures carry the turn index.
Trajectory run_interaction(AgentBackend& a1, AgentBackend& a2, const TaskData& task1,
                           const TaskData& task2, double eta, int steps,
                           const InteractionOptions& opts = {});

}  // namespace a2a

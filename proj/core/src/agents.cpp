#include "a2a/agents.hpp"

namespace a2a {

Vec oracle_gradient(const TaskData& task, const Vec& w, LossMode loss_mode) {
  if (w.size() != task.X.rows())
    throw std::invalid_argument("oracle_gradient: weight dim != task dim");
  Vec g = task.X * (task.X.transpose() * w - task.y);
  if (loss_mode == LossMode::Mean) g /= double(task.X.cols());
  return g;
}

Vec ExactOracleBackend::gradient(const TaskData& task, const std::vector<Vec>& history) {
  if (history.empty())
    throw std::invalid_argument("ExactOracleBackend: empty history");
  return oracle_gradient(task, history.back(), mode_);
}

Vec LsaBackend::gradient(const TaskData& task, const std::vector<Vec>& history) {
  return lsa_predict(params_, task, history);
}

Trajectory run_interaction(AgentBackend& a1, AgentBackend& a2, const TaskData& task1,
                           const TaskData& task2, double eta, int steps,
                           const InteractionOptions& opts) {
  const auto d = task1.X.rows();
  if (task2.X.rows() != d)
    throw std::invalid_argument("run_interaction: tasks disagree on dimension");
  if (steps < 1) throw std::invalid_argument("run_interaction: steps >= 1");

  Trajectory traj;
  traj.iterates.push_back(Vec::Zero(d));

  auto half_step = [&](AgentBackend& agent, const TaskData& task, const Vec& target,
                       std::vector<double>& errs, int turn) {
    Vec g;
    try {
      g = agent.gradient(task, traj.iterates);
    } catch (const DivergenceError&) {
      throw;
    } catch (const std::exception& ex) {
      throw BackendError("backend '" + agent.name() + "' failed at turn " +
                             std::to_string(turn) + ": " + ex.what(),
                         turn);
    }
    if (g.size() != d)
      throw BackendError("backend '" + agent.name() + "' returned a vector of length " +
                             std::to_string(g.size()) + " (want " + std::to_string(d) +
                             ") at turn " + std::to_string(turn),
                         turn);
    Vec next = traj.iterates.back() - eta * g;
    if (!next.allFinite() || next.norm() > opts.divergence_cap)
      throw DivergenceError("interaction diverged at turn " + std::to_string(turn), turn);
    traj.iterates.push_back(std::move(next));
    errs.push_back((traj.iterates.back() - target).norm());
  };

  Vec prev_full = traj.iterates.front();
  for (int s = 0; s < steps; ++s) {
    half_step(a1, task1, task1.target, traj.err_w, s);
    half_step(a2, task2, task2.target, traj.err_u, s);
    ++traj.turns_run;
    if (opts.stop_tol > 0.0 &&
        (traj.iterates.back() - prev_full).norm() <= opts.stop_tol) {
      traj.converged = true;
      break;
    }
    prev_full = traj.iterates.back();
  }
  return traj;
}

}  // namespace a2a

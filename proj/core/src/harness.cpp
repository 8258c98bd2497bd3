#include "a2a/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "a2a/io.hpp"
#include "a2a/rng.hpp"

namespace a2a {

using nlohmann::json;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Converge: return "converge";
    case ExperimentKind::AngleSweep: return "angle_sweep";
    case ExperimentKind::Attack: return "attack";
  }
  throw std::logic_error("bad ExperimentKind");
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "converge" || name == "simulate") return ExperimentKind::Converge;
  if (name == "angle_sweep" || name == "sweep-angle" || name == "sweep_angle")
    return ExperimentKind::AngleSweep;
  if (name == "attack") return ExperimentKind::Attack;
  throw ConfigError("unknown experiment kind: " + name);
}

std::string to_string(GapType gap) {
  switch (gap) {
    case GapType::Orthogonal: return "orthogonal";
    case GapType::Scaled: return "scaled";
    case GapType::Opposite: return "opposite";
  }
  throw std::logic_error("bad GapType");
}

GapType gap_type_from_string(const std::string& name) {
  if (name == "orthogonal") return GapType::Orthogonal;
  if (name == "scaled") return GapType::Scaled;
  if (name == "opposite") return GapType::Opposite;
  throw ConfigError("unknown gap type: " + name);
}

namespace {

json endpoint_to_json(const EndpointConfig& e) {
  json j = {
      {"base_url", e.base_url},
      {"model_name", e.model_name},
      {"api_key_env", e.api_key_env},
      {"temperature", e.temperature},
      {"top_p", e.top_p},
      {"max_retries", e.max_retries},
      {"timeout_seconds", e.timeout_seconds},
      {"requests_per_second", e.requests_per_second},
      {"max_concurrent", e.max_concurrent},
      {"transcript_path", e.transcript_path},
  };
  if (e.reasoning_effort) j["reasoning_effort"] = *e.reasoning_effort;
  if (e.frequency_penalty) j["frequency_penalty"] = *e.frequency_penalty;
  if (e.presence_penalty) j["presence_penalty"] = *e.presence_penalty;
  return j;
}

EndpointConfig endpoint_from_json(const json& j) {
  EndpointConfig e;
  e.base_url = j.value("base_url", e.base_url);
  e.model_name = j.value("model_name", e.model_name);
  e.api_key_env = j.value("api_key_env", e.api_key_env);
  e.temperature = j.value("temperature", e.temperature);
  e.top_p = j.value("top_p", e.top_p);
  e.max_retries = j.value("max_retries", e.max_retries);
  e.timeout_seconds = j.value("timeout_seconds", e.timeout_seconds);
  e.requests_per_second = j.value("requests_per_second", e.requests_per_second);
  e.max_concurrent = j.value("max_concurrent", e.max_concurrent);
  e.transcript_path = j.value("transcript_path", e.transcript_path);
  if (j.contains("reasoning_effort"))
    e.reasoning_effort = j.at("reasoning_effort").get<std::string>();
  if (j.contains("frequency_penalty"))
    e.frequency_penalty = j.at("frequency_penalty").get<double>();
  if (j.contains("presence_penalty"))
    e.presence_penalty = j.at("presence_penalty").get<double>();
  if (e.max_retries < 1) throw ConfigError("endpoint.max_retries must be >= 1");
  if (!(e.timeout_seconds > 0)) throw ConfigError("endpoint.timeout_seconds must be > 0");
  return e;
}

json backend_to_json(const BackendSpec& b) {
  json j = {{"kind", b.kind}};
  if (!b.checkpoint.empty()) j["checkpoint"] = b.checkpoint;
  if (b.kind == "llm") j["endpoint"] = endpoint_to_json(b.endpoint);
  return j;
}

BackendSpec backend_from_json(const json& j) {
  BackendSpec b;
  b.kind = j.value("kind", b.kind);
  if (b.kind != "exact" && b.kind != "lsa" && b.kind != "llm")
    throw ConfigError("backend kind must be exact | lsa | llm, got " + b.kind);
  b.checkpoint = j.value("checkpoint", b.checkpoint);
  if (b.kind == "lsa" && b.checkpoint.empty())
    throw ConfigError("lsa backend requires a checkpoint path");
  if (j.contains("endpoint")) b.endpoint = endpoint_from_json(j.at("endpoint"));
  if (b.kind == "llm" && b.endpoint.base_url.empty())
    throw ConfigError("llm backend requires endpoint.base_url");
  return b;
}

const std::vector<std::string> kKnownKeys = {
    "kind",        "d",          "n",           "eta",          "turns",
    "seeds",       "backend_w",  "backend_u",   "loss_mode",    "scale_mode",
    "out_dir",     "stop_tol",   "plateau_window", "workers",   "theta",
    "norm_w",      "norm_u",     "theta_points", "theta_min",   "theta_max",
    "gap_type",    "scaled_gap_c", "eps_victim", "eps_attacker", "tau",
};

}  // namespace

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json j = {
      {"kind", to_string(c.kind)},
      {"d", c.d},
      {"n", c.n},
      {"eta", c.eta},
      {"turns", c.turns},
      {"seeds", c.seeds},
      {"backend_w", backend_to_json(c.backend_w)},
      {"backend_u", backend_to_json(c.backend_u)},
      {"loss_mode", to_string(c.loss_mode)},
      {"scale_mode", to_string(c.scale_mode)},
      {"out_dir", c.out_dir},
      {"stop_tol", c.stop_tol},
      {"plateau_window", c.plateau_window},
      {"workers", c.workers},
      {"theta", c.theta},
      {"norm_w", c.norm_w},
      {"norm_u", c.norm_u},
      {"theta_points", c.theta_points},
      {"theta_min", c.theta_min},
      {"theta_max", c.theta_max},
      {"gap_type", to_string(c.gap_type)},
      {"scaled_gap_c", c.scaled_gap_c},
      {"eps_victim", c.eps_victim},
      {"eps_attacker", c.eps_attacker},
      {"tau", c.tau},
  };
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
      throw ConfigError("unknown config key: " + key);

  ExperimentConfig c;
  if (j.contains("kind")) c.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
  c.d = j.value("d", c.d);
  c.n = j.value("n", c.n);
  c.eta = j.value("eta", c.eta);
  c.turns = j.value("turns", c.turns);
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    c.seeds.clear();
    if (s.is_array()) {
      for (const auto& v : s) c.seeds.push_back(v.get<std::uint64_t>());
    } else if (s.is_object()) {
      const auto start = s.at("start").get<std::uint64_t>();
      const auto count = s.at("count").get<std::uint64_t>();
      for (std::uint64_t k = 0; k < count; ++k) c.seeds.push_back(start + k);
    } else {
      throw ConfigError("seeds must be an array or {start, count}");
    }
  }
  if (j.contains("backend_w")) c.backend_w = backend_from_json(j.at("backend_w"));
  if (j.contains("backend_u")) c.backend_u = backend_from_json(j.at("backend_u"));
  if (j.contains("loss_mode")) c.loss_mode = loss_mode_from_string(j.at("loss_mode"));
  if (j.contains("scale_mode")) c.scale_mode = scale_mode_from_string(j.at("scale_mode"));
  c.out_dir = j.value("out_dir", c.out_dir);
  c.stop_tol = j.value("stop_tol", c.stop_tol);
  c.plateau_window = j.value("plateau_window", c.plateau_window);
  c.workers = j.value("workers", c.workers);
  c.theta = j.value("theta", c.theta);
  c.norm_w = j.value("norm_w", c.norm_w);
  c.norm_u = j.value("norm_u", c.norm_u);
  c.theta_points = j.value("theta_points", c.theta_points);
  c.theta_min = j.value("theta_min", c.theta_min);
  c.theta_max = j.value("theta_max", c.theta_max);
  if (j.contains("gap_type")) c.gap_type = gap_type_from_string(j.at("gap_type"));
  c.scaled_gap_c = j.value("scaled_gap_c", c.scaled_gap_c);
  c.eps_victim = j.value("eps_victim", c.eps_victim);
  c.eps_attacker = j.value("eps_attacker", c.eps_attacker);
  c.tau = j.value("tau", c.tau);

  if (c.d < 1 || c.n < 1) throw ConfigError("config: d and n must be >= 1");
  if (!(c.eta > 0)) throw ConfigError("config: eta must be > 0");
  if (c.turns < 1) throw ConfigError("config: turns must be >= 1");
  if (c.seeds.empty()) throw ConfigError("config: seeds must be non-empty");
  if (!(c.plateau_window > 0 && c.plateau_window <= 1))
    throw ConfigError("config: plateau_window must be in (0, 1]");
  if (c.theta_points < 1) throw ConfigError("config: theta_points must be >= 1");
  return c;
}

std::string experiment_config_hash(const ExperimentConfig& config) {
  return hash_hex(fnv1a64(experiment_config_to_json(config)));
}

TaskData relabeled_task(TaskData task, const Vec& target) {
  if (target.size() != task.X.rows())
    throw std::invalid_argument("relabeled_task: target dim != task dim");
  task.target = target;
  task.y = task.X.transpose() * target;
  return task;
}

SymMatrix effective_geometry(const Mat& X, LossMode mode) {
  if (mode == LossMode::Mean) return sample_covariance(X);
  Mat S = X * X.transpose();
  S = 0.5 * (S + S.transpose()).eval();
  return SymMatrix(std::move(S), true);
}

Vec make_gap(const Vec& w_star, GapType gap, double scaled_c, std::uint64_t seed) {
  switch (gap) {
    case GapType::Opposite:
      return -w_star;
    case GapType::Scaled:
      return scaled_c * w_star;
    case GapType::Orthogonal: {
      const auto d = w_star.size();
      if (d < 2)
        throw InfeasibleAngleError("orthogonal gap needs d >= 2");
      const double norm = w_star.norm();
      if (norm == 0.0) throw DegenerateInputError("orthogonal gap: zero w*");
      Rng rng(seed);
      const Vec a = w_star / norm;
      Vec b = rng.normal_vector(int(d));
      b -= a.dot(b) * a;
      while (b.norm() < 1e-12) {
        b = rng.normal_vector(int(d));
        b -= a.dot(b) * a;
      }
      b.normalize();
      b -= a.dot(b) * a;
      b.normalize();
      return norm * b;
    }
  }
  throw std::logic_error("bad GapType");
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(size_t(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::scoped_lock lock(err_mu);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

int resolve_workers(const ExperimentConfig& config, int count) {
  if (config.workers > 0) return std::min(config.workers, count);
  const unsigned hw = std::thread::hardware_concurrency();
  return std::min<int>(std::max(1u, hw), count);
}

// Loads checkpoints once up front; make() is then safe from worker threads.
class BackendFactory {
 public:
  BackendFactory(const BackendSpec& spec, LossMode mode) : spec_(spec), mode_(mode) {
    if (spec_.kind == "lsa") params_ = load_lsa_checkpoint(spec_.checkpoint);
  }

  std::unique_ptr<AgentBackend> make() const {
    if (spec_.kind == "exact") return std::make_unique<ExactOracleBackend>(mode_);
    if (spec_.kind == "lsa") return std::make_unique<LsaBackend>(params_);
    if (spec_.kind == "llm") return std::make_unique<LlmBackend>(spec_.endpoint);
    throw ConfigError("unknown backend kind: " + spec_.kind);
  }

 private:
  BackendSpec spec_;
  LossMode mode_;
  LsaParams params_;
};

struct MeanStd {
  double mean = 0, std = 0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd ms;
  if (xs.empty()) return ms;
  for (double x : xs) ms.mean += x;
  ms.mean /= double(xs.size());
  for (double x : xs) ms.std += (x - ms.mean) * (x - ms.mean);
  ms.std = std::sqrt(ms.std / double(xs.size()));
  return ms;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace

ExperimentReport run_converge(const ExperimentConfig& config) {
  Timer timer;
  ExperimentReport report;
  report.config = config;
  report.config_hash = experiment_config_hash(config);
  const int count = static_cast<int>(config.seeds.size());
  report.converge_rows.resize(size_t(count));
  report.trajectories.resize(size_t(count));
  report.objective_pairs.resize(size_t(count));

  const BackendFactory factory_w(config.backend_w, config.loss_mode);
  const BackendFactory factory_u(config.backend_u, config.loss_mode);

  parallel_for(count, resolve_workers(config, count), [&](int i) {
    const std::uint64_t seed = config.seeds[size_t(i)];
    TaskData task_w = generate_task(config.d, config.n, config.scale_mode, mix_seed(seed, 1));
    TaskData task_u = generate_task(config.d, config.n, config.scale_mode, mix_seed(seed, 2));
    const ObjectivePair pair = pair_with_angle(config.d, config.theta, config.norm_w,
                                               config.norm_u, mix_seed(seed, 3));
    task_w = relabeled_task(std::move(task_w), pair.w_star);
    task_u = relabeled_task(std::move(task_u), pair.u_star);
    const SymMatrix S_w = effective_geometry(task_w.X, config.loss_mode);
    const SymMatrix S_u = effective_geometry(task_u.X, config.loss_mode);

    auto backend_w = factory_w.make();
    auto backend_u = factory_u.make();
    InteractionOptions opts;
    opts.stop_tol = config.stop_tol;
    const Trajectory traj = run_interaction(*backend_w, *backend_u, task_w, task_u,
                                            config.eta, config.turns, opts);
    const PlateauPrediction pred = plateau_prediction(S_w, S_u, pair, config.eta);

    ConvergeRow row;
    row.seed = seed;
    row.stable = stability_check(config.eta, S_w, S_u).stable;
    row.converged = traj.converged;
    row.turns_run = traj.turns_run;
    row.plateau_w = plateau_mean(traj.err_w, config.plateau_window);
    row.plateau_u = plateau_mean(traj.err_u, config.plateau_window);
    row.predicted_w = pred.err_w;
    row.predicted_u = pred.err_u;
    row.norm_denom = std::sqrt(pair.w_star.squaredNorm() + pair.u_star.squaredNorm());
    row.plateau_w_norm = row.plateau_w / row.norm_denom;
    row.plateau_u_norm = row.plateau_u / row.norm_denom;
    row.final_err_w = traj.err_w.back();
    row.final_err_u = traj.err_u.back();

    report.converge_rows[size_t(i)] = row;
    report.trajectories[size_t(i)] = traj;
    report.objective_pairs[size_t(i)] = pair;
  });

  std::vector<double> pw, pu;
  for (const auto& r : report.converge_rows) {
    pw.push_back(r.plateau_w);
    pu.push_back(r.plateau_u);
  }
  const MeanStd mw = mean_std(pw), mu = mean_std(pu);
  report.mean_plateau_w = mw.mean;
  report.std_plateau_w = mw.std;
  report.mean_plateau_u = mu.mean;
  report.std_plateau_u = mu.std;
  report.runtime_seconds = timer.seconds();
  return report;
}

ExperimentReport sweep_angles(const ExperimentConfig& config) {
  Timer timer;
  ExperimentReport report;
  report.config = config;
  report.config_hash = experiment_config_hash(config);

  std::vector<double> grid;
  if (config.theta_points == 1) {
    grid.push_back(config.theta_min);
  } else {
    for (int t = 0; t < config.theta_points; ++t)
      grid.push_back(config.theta_min + (config.theta_max - config.theta_min) * double(t) /
                                            double(config.theta_points - 1));
  }
  report.theta_grid = grid;

  const int seeds_n = static_cast<int>(config.seeds.size());
  const int count = static_cast<int>(grid.size()) * seeds_n;
  report.sweep_rows.resize(size_t(count));

  const BackendFactory factory_w(config.backend_w, config.loss_mode);
  const BackendFactory factory_u(config.backend_u, config.loss_mode);

  parallel_for(count, resolve_workers(config, count), [&](int idx) {
    const int ti = idx / seeds_n;
    const int si = idx % seeds_n;
    const double theta = grid[size_t(ti)];
    const std::uint64_t seed = config.seeds[size_t(si)];

    // Paired design: the same seed produces the same tasks and objective
    // frame at every grid angle, so seed-averaged curves vary only in theta.
    TaskData task_w = generate_task(config.d, config.n, config.scale_mode, mix_seed(seed, 1));
    TaskData task_u = generate_task(config.d, config.n, config.scale_mode, mix_seed(seed, 2));
    const ObjectivePair pair =
        pair_with_angle(config.d, theta, config.norm_w, config.norm_u, mix_seed(seed, 3));
    task_w = relabeled_task(std::move(task_w), pair.w_star);
    task_u = relabeled_task(std::move(task_u), pair.u_star);
    const SymMatrix S_w = effective_geometry(task_w.X, config.loss_mode);
    const SymMatrix S_u = effective_geometry(task_u.X, config.loss_mode);

    auto backend_w = factory_w.make();
    auto backend_u = factory_u.make();
    InteractionOptions opts;
    opts.stop_tol = config.stop_tol;
    const Trajectory traj = run_interaction(*backend_w, *backend_u, task_w, task_u,
                                            config.eta, config.turns, opts);
    const AngleBounds bounds = angle_bounds(S_w, S_u, theta);
    const PlateauPrediction pred = plateau_prediction(S_w, S_u, pair, config.eta);

    SweepRow row;
    row.theta = theta;
    row.seed = seed;
    row.stable = stability_check(config.eta, S_w, S_u).stable;
    row.converged = traj.converged;
    row.plateau_w = plateau_mean(traj.err_w, config.plateau_window);
    row.plateau_u = plateau_mean(traj.err_u, config.plateau_window);
    row.lower_w = bounds.lower_w;
    row.upper_w = bounds.upper_w;
    row.lower_u = bounds.lower_u;
    row.upper_u = bounds.upper_u;
    row.predicted_w = pred.err_w;
    row.predicted_u = pred.err_u;
    row.norm_denom = std::sqrt(pair.w_star.squaredNorm() + pair.u_star.squaredNorm());
    row.plateau_w_norm = row.plateau_w / row.norm_denom;
    row.plateau_u_norm = row.plateau_u / row.norm_denom;
    report.sweep_rows[size_t(idx)] = row;
  });

  report.theta_mean_plateau_w.assign(grid.size(), 0.0);
  report.theta_mean_plateau_u.assign(grid.size(), 0.0);
  for (std::size_t ti = 0; ti < grid.size(); ++ti) {
    for (int si = 0; si < seeds_n; ++si) {
      const SweepRow& r = report.sweep_rows[ti * size_t(seeds_n) + size_t(si)];
      report.theta_mean_plateau_w[ti] += r.plateau_w;
      report.theta_mean_plateau_u[ti] += r.plateau_u;
    }
    report.theta_mean_plateau_w[ti] /= double(seeds_n);
    report.theta_mean_plateau_u[ti] /= double(seeds_n);
  }

  std::vector<double> pw, pu;
  for (const auto& r : report.sweep_rows) {
    pw.push_back(r.plateau_w);
    pu.push_back(r.plateau_u);
  }
  const MeanStd mw = mean_std(pw), mu = mean_std(pu);
  report.mean_plateau_w = mw.mean;
  report.std_plateau_w = mw.std;
  report.mean_plateau_u = mu.mean;
  report.std_plateau_u = mu.std;
  report.runtime_seconds = timer.seconds();
  return report;
}

ExperimentReport attack_experiment(const ExperimentConfig& config) {
  Timer timer;
  ExperimentReport report;
  report.config = config;
  report.config_hash = experiment_config_hash(config);
  const int count = static_cast<int>(config.seeds.size());
  report.attack_rows.resize(size_t(count));
  std::vector<std::vector<double>> curves_w(static_cast<std::size_t>(count));
  std::vector<std::vector<double>> curves_u(static_cast<std::size_t>(count));

  const BackendFactory factory_w(config.backend_w, config.loss_mode);
  const BackendFactory factory_u(config.backend_u, config.loss_mode);

  parallel_for(count, resolve_workers(config, count), [&](int i) {
    const std::uint64_t seed = config.seeds[size_t(i)];
    AttackRow row;
    row.seed = seed;

    const TaskData task_w =
        generate_task(config.d, config.n, config.scale_mode, mix_seed(seed, 1));
    const Vec u_star =
        make_gap(task_w.target, config.gap_type, config.scaled_gap_c, mix_seed(seed, 3));
    const ObjectivePair pair = ObjectivePair::from_targets(task_w.target, u_star);
    const SymMatrix S_w = effective_geometry(task_w.X, config.loss_mode);

    AttackDesign design{SymMatrix::identity(config.d), Mat(), Vec(), 0, 0, 0, {}};
    try {
      design = design_attack(S_w, pair, config.eta, config.tau, config.n);
    } catch (const std::exception& ex) {
      row.construction_failed = true;
      row.failure_reason = ex.what();
      report.attack_rows[size_t(i)] = row;
      return;
    }

    // The attacker's own agent must APPLY S_u, so the realization scale
    // follows the gradient convention of this experiment.
    Mat X_u = design.X_u;
    if (config.loss_mode == LossMode::Sum) X_u /= std::sqrt(double(config.n));
    TaskData task_u;
    task_u.X = std::move(X_u);
    task_u.target = pair.u_star;
    task_u.y = task_u.X.transpose() * task_u.target;
    task_u.seed = seed;

    row.stable = stability_check(config.eta, S_w, design.S_u).stable;
    auto backend_w = factory_w.make();
    auto backend_u = factory_u.make();
    InteractionOptions opts;
    opts.stop_tol = 0.0;  // fixed budget keeps per-seed curves aligned
    const Trajectory traj = run_interaction(*backend_w, *backend_u, task_w, task_u,
                                            config.eta, config.turns, opts);

    row.eps_victim =
        config.eps_victim > 0 ? config.eps_victim : default_eps_victim(pair);
    row.eps_attacker =
        config.eps_attacker > 0 ? config.eps_attacker : default_eps_attacker(pair);
    const AttackOutcome outcome =
        evaluate_attack(traj, pair, row.eps_victim, row.eps_attacker);
    row.success = outcome.success;
    row.final_err_w = outcome.final_err_w;
    row.final_err_u = outcome.final_err_u;
    row.victim_residual_pred = victim_residual_norm(S_w, pair, config.eta);
    const PlateauPrediction pred = plateau_prediction(S_w, design.S_u, pair, config.eta);
    row.predicted_w = pred.err_w;
    row.predicted_u = pred.err_u;

    report.attack_rows[size_t(i)] = row;
    curves_w[size_t(i)] = traj.err_w;
    curves_u[size_t(i)] = traj.err_u;
  });

  std::size_t curve_len = 0;
  for (const auto& row : report.attack_rows) {
    if (row.construction_failed) {
      ++report.failed_constructions;
    } else if (row.success) {
      ++report.successes;
    }
  }
  const int evaluated = count - report.failed_constructions;
  report.success_rate = evaluated > 0 ? double(report.successes) / double(evaluated) : 0.0;

  for (std::size_t i = 0; i < curves_w.size(); ++i)
    curve_len = std::max(curve_len, curves_w[i].size());
  if (curve_len > 0) {
    auto aggregate = [&](const std::vector<std::vector<double>>& curves,
                         std::vector<double>& mean, std::vector<double>& stdev) {
      mean.assign(curve_len, 0.0);
      stdev.assign(curve_len, 0.0);
      std::vector<int> counts(curve_len, 0);
      for (const auto& c : curves)
        for (std::size_t k = 0; k < c.size(); ++k) {
          mean[k] += c[k];
          ++counts[k];
        }
      for (std::size_t k = 0; k < curve_len; ++k)
        if (counts[k]) mean[k] /= counts[k];
      for (const auto& c : curves)
        for (std::size_t k = 0; k < c.size(); ++k)
          stdev[k] += (c[k] - mean[k]) * (c[k] - mean[k]);
      for (std::size_t k = 0; k < curve_len; ++k)
        if (counts[k]) stdev[k] = std::sqrt(stdev[k] / counts[k]);
    };
    aggregate(curves_w, report.mean_err_w_curve, report.std_err_w_curve);
    aggregate(curves_u, report.mean_err_u_curve, report.std_err_u_curve);
  }
  report.runtime_seconds = timer.seconds();
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::Converge: return run_converge(config);
    case ExperimentKind::AngleSweep: return sweep_angles(config);
    case ExperimentKind::Attack: return attack_experiment(config);
  }
  throw std::logic_error("bad ExperimentKind");
}

namespace {

json converge_row_json(const ConvergeRow& r, const std::string& hash) {
  return {
      {"seed", r.seed},           {"config_hash", hash},
      {"stable", r.stable},       {"converged", r.converged},
      {"turns_run", r.turns_run}, {"plateau_w", r.plateau_w},
      {"plateau_u", r.plateau_u}, {"predicted_w", r.predicted_w},
      {"predicted_u", r.predicted_u}, {"plateau_w_norm", r.plateau_w_norm},
      {"plateau_u_norm", r.plateau_u_norm}, {"norm_denom", r.norm_denom},
      {"final_err_w", r.final_err_w}, {"final_err_u", r.final_err_u},
  };
}

json sweep_row_json(const SweepRow& r, const std::string& hash) {
  return {
      {"theta", r.theta},         {"seed", r.seed},
      {"config_hash", hash},      {"stable", r.stable},
      {"converged", r.converged}, {"plateau_w", r.plateau_w},
      {"plateau_u", r.plateau_u}, {"lower_w", r.lower_w},
      {"upper_w", r.upper_w},     {"lower_u", r.lower_u},
      {"upper_u", r.upper_u},     {"predicted_w", r.predicted_w},
      {"predicted_u", r.predicted_u}, {"plateau_w_norm", r.plateau_w_norm},
      {"plateau_u_norm", r.plateau_u_norm}, {"norm_denom", r.norm_denom},
  };
}

json attack_row_json(const AttackRow& r, const std::string& hash) {
  return {
      {"seed", r.seed},
      {"config_hash", hash},
      {"construction_failed", r.construction_failed},
      {"failure_reason", r.failure_reason},
      {"stable", r.stable},
      {"success", r.success},
      {"final_err_w", r.final_err_w},
      {"final_err_u", r.final_err_u},
      {"victim_residual_pred", r.victim_residual_pred},
      {"predicted_w", r.predicted_w},
      {"predicted_u", r.predicted_u},
      {"eps_victim", r.eps_victim},
      {"eps_attacker", r.eps_attacker},
  };
}

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  json j;
  j["config"] = json::parse(experiment_config_to_json(report.config));
  j["config_hash"] = report.config_hash;
  j["runtime_seconds"] = report.runtime_seconds;
  j["plateau_window"] = report.config.plateau_window;

  switch (report.config.kind) {
    case ExperimentKind::Converge: {
      json rows = json::array();
      for (const auto& r : report.converge_rows)
        rows.push_back(converge_row_json(r, report.config_hash));
      j["rows"] = rows;
      j["aggregates"] = {{"mean_plateau_w", report.mean_plateau_w},
                         {"std_plateau_w", report.std_plateau_w},
                         {"mean_plateau_u", report.mean_plateau_u},
                         {"std_plateau_u", report.std_plateau_u}};
      break;
    }
    case ExperimentKind::AngleSweep: {
      json rows = json::array();
      for (const auto& r : report.sweep_rows)
        rows.push_back(sweep_row_json(r, report.config_hash));
      j["rows"] = rows;
      j["aggregates"] = {{"theta_grid", report.theta_grid},
                         {"theta_mean_plateau_w", report.theta_mean_plateau_w},
                         {"theta_mean_plateau_u", report.theta_mean_plateau_u},
                         {"mean_plateau_w", report.mean_plateau_w},
                         {"std_plateau_w", report.std_plateau_w},
                         {"mean_plateau_u", report.mean_plateau_u},
                         {"std_plateau_u", report.std_plateau_u}};
      break;
    }
    case ExperimentKind::Attack: {
      json rows = json::array();
      for (const auto& r : report.attack_rows)
        rows.push_back(attack_row_json(r, report.config_hash));
      j["rows"] = rows;
      j["aggregates"] = {{"success_rate", report.success_rate},
                         {"successes", report.successes},
                         {"failed_constructions", report.failed_constructions},
                         {"mean_err_w_curve", report.mean_err_w_curve},
                         {"std_err_w_curve", report.std_err_w_curve},
                         {"mean_err_u_curve", report.mean_err_u_curve},
                         {"std_err_u_curve", report.std_err_u_curve}};
      break;
    }
  }
  return j.dump(2);
}

std::string sweep_rows_to_csv(const ExperimentReport& report) {
  std::string out = "# config_hash=" + report.config_hash +
                    " plateau_window=" + fmt17(report.config.plateau_window) + "\n";
  out +=
      "theta,seed,plateau_w,plateau_u,lower_w,upper_w,lower_u,upper_u,predicted_w,"
      "predicted_u\n";
  for (const auto& r : report.sweep_rows) {
    out += fmt17(r.theta) + "," + std::to_string(r.seed) + "," + fmt17(r.plateau_w) + "," +
           fmt17(r.plateau_u) + "," + fmt17(r.lower_w) + "," + fmt17(r.upper_w) + "," +
           fmt17(r.lower_u) + "," + fmt17(r.upper_u) + "," + fmt17(r.predicted_w) + "," +
           fmt17(r.predicted_u) + "\n";
  }
  return out;
}

void write_experiment_outputs(const ExperimentReport& report) {
  namespace fs = std::filesystem;
  const fs::path dir(report.config.out_dir);
  fs::create_directories(dir);
  atomic_write_text((dir / "config.json").string(),
                    experiment_config_to_json(report.config));
  atomic_write_text((dir / "report.json").string(), report_to_json(report));
  if (report.config.kind == ExperimentKind::AngleSweep)
    atomic_write_text((dir / "plateaus.csv").string(), sweep_rows_to_csv(report));
  if (report.config.kind == ExperimentKind::Converge) {
    for (std::size_t i = 0; i < report.trajectories.size(); ++i) {
      const std::string stem =
          report.trajectories.size() == 1
              ? "trajectory"
              : "trajectory_" + std::to_string(report.config.seeds[i]);
      atomic_write_text((dir / (stem + ".csv")).string(),
                        trajectory_to_csv(report.trajectories[i], report.objective_pairs[i],
                                          report.config_hash));
      atomic_write_text((dir / (stem + ".jsonl")).string(),
                        trajectory_to_jsonl(report.trajectories[i],
                                            report.objective_pairs[i], report.config_hash));
    }
  }
}

}  // namespace a2a

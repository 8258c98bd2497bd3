#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "a2a/adversary.hpp"
#include "a2a/agents.hpp"
#include "a2a/llm_bridge.hpp"
#include "a2a/predictor.hpp"

namespace a2a {

enum class ExperimentKind { Converge, AngleSweep, Attack };
enum class GapType { Orthogonal, Scaled, Opposite };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);
std::string to_string(GapType gap);
GapType gap_type_from_string(const std::string& name);

/// Which agent implementation to run: "exact" (oracle gradient), "lsa"
/// (trained checkpoint), or "llm" (remote endpoint).
struct BackendSpec {
  std::string kind = "exact";
  std::string checkpoint;    // lsa only
  EndpointConfig endpoint;   // llm only
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Converge;
  int d = 10;
  int n = 20;
  double eta = 0.005;
  int turns = 10000;
  std::vector<std::uint64_t> seeds = {0};
  BackendSpec backend_w;
  BackendSpec backend_u;
  LossMode loss_mode = LossMode::Mean;
  ScaleMode scale_mode = ScaleMode::InvDim;
  std::string out_dir = "out";
  double stop_tol = 1e-10;      // early stop; attack runs ignore it (aligned curves)
  double plateau_window = 0.1;  // last-fraction mean, recorded in outputs
  int workers = 0;              // parallel seed fan-out; 0 = hardware concurrency

  // converge: objective construction
  double theta = 1.5707963267948966;
  double norm_w = 1.0;
  double norm_u = 1.0;

  // angle sweep grid (paired seeds across the grid)
  int theta_points = 19;
  double theta_min = 0.0;
  double theta_max = 3.141592653589793;

  // attack
  GapType gap_type = GapType::Opposite;
  double scaled_gap_c = 2.0;
  double eps_victim = 0.0;    // 0 = 0.1 |delta| per seed
  double eps_attacker = 0.0;  // 0 = 1e-3 max(1, |u*|) per seed
  double tau = 0.1;
};

std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_hash(const ExperimentConfig& config);

struct ConvergeRow {
  std::uint64_t seed = 0;
  bool stable = false;
  bool converged = false;
  int turns_run = 0;
  double plateau_w = 0, plateau_u = 0;
  double predicted_w = 0, predicted_u = 0;
  double plateau_w_norm = 0, plateau_u_norm = 0, norm_denom = 0;
  double final_err_w = 0, final_err_u = 0;
};

struct SweepRow {
  double theta = 0;
  std::uint64_t seed = 0;
  bool stable = false;
  bool converged = false;
  double plateau_w = 0, plateau_u = 0;
  double lower_w = 0, upper_w = 0, lower_u = 0, upper_u = 0;
  double predicted_w = 0, predicted_u = 0;
  double plateau_w_norm = 0, plateau_u_norm = 0, norm_denom = 0;
};

struct AttackRow {
  std::uint64_t seed = 0;
  bool construction_failed = false;
  std::string failure_reason;
  bool stable = false;
  bool success = false;
  double final_err_w = 0, final_err_u = 0;
  double victim_residual_pred = 0;  // |(eta S_W - I) delta|, always reported
  double predicted_w = 0, predicted_u = 0;
  double eps_victim = 0, eps_attacker = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string config_hash;
  double runtime_seconds = 0;

  std::vector<ConvergeRow> converge_rows;
  std::vector<SweepRow> sweep_rows;
  std::vector<AttackRow> attack_rows;

  // converge artifacts, one per seed, for trajectory files
  std::vector<Trajectory> trajectories;
  std::vector<ObjectivePair> objective_pairs;

  // attack aggregates
  int successes = 0;
  int failed_constructions = 0;
  double success_rate = 0;
  std::vector<double> mean_err_w_curve, std_err_w_curve;
  std::vector<double> mean_err_u_curve, std_err_u_curve;

  // converge/sweep aggregates
  double mean_plateau_w = 0, std_plateau_w = 0;
  double mean_plateau_u = 0, std_plateau_u = 0;
  std::vector<double> theta_grid;           // sweep: grid + seed-averaged plateaus
  std::vector<double> theta_mean_plateau_w;
  std::vector<double> theta_mean_plateau_u;
};

ExperimentReport run_converge(const ExperimentConfig& config);
ExperimentReport sweep_angles(const ExperimentConfig& config);
ExperimentReport attack_experiment(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config);  // dispatch on kind

std::string report_to_json(const ExperimentReport& report);

/// plateaus.csv, exact column order:
/// theta,seed,plateau_w,plateau_u,lower_w,upper_w,lower_u,upper_u,predicted_w,predicted_u
std::string sweep_rows_to_csv(const ExperimentReport& report);

/// Writes report.json (+ plateaus.csv for sweeps, trajectory_<seed>.csv/.jsonl
/// for converge runs) plus a config echo into config.out_dir, atomically.
void write_experiment_outputs(const ExperimentReport& report);

/// Per-seed derived streams (documented so runs are auditable):
/// task_w <- mix(seed, 1), task_u <- mix(seed, 2), objectives/gap <- mix(seed, 3).
TaskData relabeled_task(TaskData task, const Vec& target);

/// Effective geometry an exact agent applies under the given mode:
/// X X^T / n for Mean, X X^T for Sum.
SymMatrix effective_geometry(const Mat& X, LossMode mode);

/// u* for the three attack gap settings, built from the victim's target.
Vec make_gap(const Vec& w_star, GapType gap, double scaled_c, std::uint64_t seed);

void parallel_for(int count, int workers, const std::function<void(int)>& fn);

}  // namespace a2a

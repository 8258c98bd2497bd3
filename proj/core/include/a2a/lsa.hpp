#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "a2a/geometry.hpp"

namespace a2a {

/// Gradient convention for the regression loss. Sum: g = X (X^T w - y);
/// Mean: the same divided by n. The flag travels in all configs and output
/// metadata because the geometry S = X X^T / n pairs with Mean while the
/// training recipe generates Sum-mode trajectories.
enum class LossMode { Mean, Sum };

std::string to_string(LossMode mode);
LossMode loss_mode_from_string(const std::string& name);
std::string to_string(ScaleMode mode);
ScaleMode scale_mode_from_string(const std::string& name);

/// Token matrix fed to the LSA, (2d+2) x (n + t + 1):
///   rows 0..d-1   data columns carry X, history columns are zero
///   row  d        data columns carry y
///   rows d+1..2d  history columns carry the iterates w_0..w_t
///   row  2d+1     1 on history columns, 0 on data columns
struct TokenMatrix {
  int d = 0;
  int n = 0;
  int history_len = 0;
  Mat entries;
};

TokenMatrix build_tokens(const TaskData& task, const std::vector<Vec>& history);

struct LsaTrainMeta {
  int epochs_run = 0;
  double final_loss = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> loss_curve;  // per-epoch mean batch loss
  LossMode loss_mode = LossMode::Sum;
  double gd_eta = 0.0;
  double lr_init = 0.0;
  double lr_min = 0.0;
  int num_datasets = 0;
  int batch_size = 0;
  int max_iter = 0;
  ScaleMode scale_mode = ScaleMode::InvDim;
};

/// Learned weights of the single-layer linear self-attention map
/// f(Z) = Z + V Z (Z^T A Z) / n.
struct LsaParams {
  Mat V;
  Mat A;
  int d = 0;
  int n = 0;
  LsaTrainMeta train_meta;

  static LsaParams zeros(int d, int n);
};

struct LsaOutput {
  Mat Z_out;
  Vec prediction;  // rows d+1..2d of the last column of Z_out
};

/// Forward pass. The attention denominator is the data-example count n of
/// the token matrix, not its column count, so the map stays consistent as
/// history grows.
LsaOutput lsa_forward(const TokenMatrix& Z, const LsaParams& params);

/// Convenience: tokens from (task, history), then forward, returning just
/// the d-vector read-out.
Vec lsa_predict(const LsaParams& params, const TaskData& task,
                const std::vector<Vec>& history);

/// Ground-truth gradient-descent trajectory on the task's quadratic loss.
/// pairs[t] = (w_t, g_t) with w_{t+1} = w_t - eta g_t and w_0 = 0; stops at
/// the first t >= 1 with |g_t - g_{t-1}| <= truncation_tol (that pair is
/// kept and its index recorded).
struct GdTrajectory {
  std::vector<std::pair<Vec, Vec>> pairs;
  double eta = 0.0;
  std::optional<int> truncated_at;
};

GdTrajectory generate_trajectory(const TaskData& task, double eta, int max_iter,
                                 LossMode loss_mode, double truncation_tol = 1e-3);

struct TrainConfig {
  int d = 10;
  int n = 20;
  int num_datasets = 100;
  int batch_size = 512;
  int epochs = 100;
  double gd_eta = 0.005;   // step size of the generated trajectories
  double lr_init = 0.005;  // Adam learning rate, cosine-annealed...
  double lr_min = 0.005;   // ...down to this floor
  int max_iter = 500;
  LossMode loss_mode = LossMode::Sum;
  ScaleMode scale_mode = ScaleMode::InvDim;
  std::uint64_t seed = 0;
  double init_stddev = 1e-3;
  double truncation_tol = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

/// Trains V, A on all (dataset, step) pairs: step t presents the tokens for
/// history w_0..w_{t-1} and regresses the gradient that produces w_t, i.e.
/// the gradient at the last visible iterate. Single-threaded with a fixed
/// reduction order, so a seed pins the result bit-for-bit.
LsaParams train_lsa(const TrainConfig& config);

std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);

/// Per-pair loss |pred - g| and its analytic V/A gradients, computed on the
/// materialized token matrix. Reference path for the trainer and for
/// finite-difference checks.
struct LsaPairGrad {
  double loss;
  Mat dV;
  Mat dA;
};
LsaPairGrad lsa_pair_loss_grad(const LsaParams& params, const TokenMatrix& Z,
                               const Vec& g_target);

/// Mean per-pair loss of `params` over every (dataset, step) pair the config
/// generates. This is what train_lsa records as final_loss.
double lsa_full_loss(const LsaParams& params, const TrainConfig& config);

struct LsaEvalStats {
  double median_rel_err = 0.0;
  double mean_rel_err = 0.0;
  std::size_t pair_count = 0;
};

/// Held-out gradient accuracy: fresh tasks, rel err |pred - g| / |g| per
/// pair, median over all pairs.
LsaEvalStats evaluate_lsa_gradient_error(const LsaParams& params, const TrainConfig& config,
                                         int num_datasets, std::uint64_t seed);

/// Errors |w_k - target| when the prediction is iterated as a gradient with
/// step eta on a task, starting from w_0 = 0.
std::vector<double> lsa_rollout_errors(const LsaParams& params, const TaskData& task,
                                       double eta, int steps);

void save_lsa_checkpoint(const LsaParams& params, const std::string& path);
LsaParams load_lsa_checkpoint(const std::string& path);

}  // namespace a2a

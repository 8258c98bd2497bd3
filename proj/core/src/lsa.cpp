#include "a2a/lsa.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "a2a/io.hpp"

namespace a2a {

using nlohmann::json;

std::string to_string(LossMode mode) { return mode == LossMode::Mean ? "mean" : "sum"; }

LossMode loss_mode_from_string(const std::string& name) {
  if (name == "mean") return LossMode::Mean;
  if (name == "sum") return LossMode::Sum;
  throw ConfigError("unknown loss mode: " + name);
}

std::string to_string(ScaleMode mode) {
  return mode == ScaleMode::Unit ? "unit" : "inv_dim";
}

ScaleMode scale_mode_from_string(const std::string& name) {
  if (name == "unit") return ScaleMode::Unit;
  if (name == "inv_dim") return ScaleMode::InvDim;
  throw ConfigError("unknown scale mode: " + name);
}

TokenMatrix build_tokens(const TaskData& task, const std::vector<Vec>& history) {
  const int d = static_cast<int>(task.X.rows());
  const int n = static_cast<int>(task.X.cols());
  if (task.y.size() != n) throw std::invalid_argument("build_tokens: y length != n");
  if (history.empty())
    throw std::invalid_argument("build_tokens: history must hold at least w_0");
  for (const Vec& w : history)
    if (w.size() != d) throw std::invalid_argument("build_tokens: history entry dim != d");

  const int t1 = static_cast<int>(history.size());
  TokenMatrix Z;
  Z.d = d;
  Z.n = n;
  Z.history_len = t1;
  Z.entries = Mat::Zero(2 * d + 2, n + t1);
  Z.entries.block(0, 0, d, n) = task.X;
  Z.entries.block(d, 0, 1, n) = task.y.transpose();
  for (int k = 0; k < t1; ++k) {
    Z.entries.block(d + 1, n + k, d, 1) = history[k];
    Z.entries(2 * d + 1, n + k) = 1.0;
  }
  return Z;
}

LsaParams LsaParams::zeros(int d, int n) {
  LsaParams p;
  p.d = d;
  p.n = n;
  p.V = Mat::Zero(2 * d + 2, 2 * d + 2);
  p.A = Mat::Zero(2 * d + 2, 2 * d + 2);
  return p;
}

LsaOutput lsa_forward(const TokenMatrix& Z, const LsaParams& params) {
  const int e = 2 * Z.d + 2;
  if (Z.entries.rows() != e || params.V.rows() != e || params.V.cols() != e ||
      params.A.rows() != e || params.A.cols() != e)
    throw std::invalid_argument("lsa_forward: shape mismatch between tokens and params");
  if (Z.n < 1) throw std::invalid_argument("lsa_forward: need at least one data column");

  LsaOutput out;
  // denominator is the data-example count, not the column count
  out.Z_out = Z.entries + params.V * Z.entries *
                              (Z.entries.transpose() * (params.A * Z.entries)) /
                              double(Z.n);
  out.prediction = out.Z_out.block(Z.d + 1, out.Z_out.cols() - 1, Z.d, 1);
  return out;
}

Vec lsa_predict(const LsaParams& params, const TaskData& task,
                const std::vector<Vec>& history) {
  // Only the last output column feeds the read-out; skip the full Z_out.
  const TokenMatrix Z = build_tokens(task, history);
  const int e = 2 * Z.d + 2;
  if (params.V.rows() != e || params.A.rows() != e)
    throw std::invalid_argument("lsa_predict: shape mismatch between tokens and params");
  const Vec z_last = Z.entries.col(Z.entries.cols() - 1);
  const Vec attn =
      Z.entries * (Z.entries.transpose() * (params.A * z_last)) / double(Z.n);
  const Vec out_last = z_last + params.V * attn;
  return out_last.segment(Z.d + 1, Z.d);
}

namespace {

Vec regression_gradient(const TaskData& task, const Vec& w, LossMode mode) {
  Vec g = task.X * (task.X.transpose() * w - task.y);
  if (mode == LossMode::Mean) g /= double(task.X.cols());
  return g;
}

}  // namespace

GdTrajectory generate_trajectory(const TaskData& task, double eta, int max_iter,
                                 LossMode loss_mode, double truncation_tol) {
  if (max_iter < 1) throw std::invalid_argument("generate_trajectory: max_iter >= 1");
  GdTrajectory traj;
  traj.eta = eta;
  Vec w = Vec::Zero(task.X.rows());
  Vec g = regression_gradient(task, w, loss_mode);
  traj.pairs.emplace_back(w, g);
  for (int t = 1; t <= max_iter; ++t) {
    w = w - eta * g;
    Vec g_next = regression_gradient(task, w, loss_mode);
    traj.pairs.emplace_back(w, g_next);
    if ((g_next - g).norm() <= truncation_tol) {
      traj.truncated_at = t;
      break;
    }
    g = std::move(g_next);
  }
  return traj;
}

LsaPairGrad lsa_pair_loss_grad(const LsaParams& params, const TokenMatrix& Z,
                               const Vec& g_target) {
  const int d = Z.d;
  const int e = 2 * d + 2;
  if (g_target.size() != d)
    throw std::invalid_argument("lsa_pair_loss_grad: target dim != d");
  const Mat& M = Z.entries;
  const Vec z_last = M.col(M.cols() - 1);
  const double inv_n = 1.0 / double(Z.n);

  const Vec attn = M * (M.transpose() * (params.A * z_last)) * inv_n;  // Z Z^T A z /n
  const Vec out_last = z_last + params.V * attn;
  const Vec r = out_last.segment(d + 1, d) - g_target;
  const double loss = r.norm();

  LsaPairGrad grad;
  grad.loss = loss;
  grad.dV = Mat::Zero(e, e);
  grad.dA = Mat::Zero(e, e);
  if (loss == 0.0) return grad;  // subgradient 0 at the kink

  Vec s = Vec::Zero(e);
  s.segment(d + 1, d) = r / loss;
  grad.dV = s * attn.transpose();
  grad.dA = (M * (M.transpose() * (params.V.transpose() * s)) * inv_n) * z_last.transpose();
  return grad;
}

std::string train_config_to_json(const TrainConfig& c) {
  json j = {
      {"d", c.d},
      {"n", c.n},
      {"num_datasets", c.num_datasets},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"gd_eta", c.gd_eta},
      {"lr_init", c.lr_init},
      {"lr_min", c.lr_min},
      {"max_iter", c.max_iter},
      {"loss_mode", to_string(c.loss_mode)},
      {"scale_mode", to_string(c.scale_mode)},
      {"seed", c.seed},
      {"init_stddev", c.init_stddev},
      {"truncation_tol", c.truncation_tol},
      {"beta1", c.beta1},
      {"beta2", c.beta2},
      {"adam_eps", c.adam_eps},
  };
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("train config is not valid JSON: ") + ex.what());
  }
  static const std::vector<std::string> known = {
      "d",          "n",         "num_datasets", "batch_size", "epochs",
      "gd_eta",     "lr_init",   "lr_min",       "max_iter",   "loss_mode",
      "scale_mode", "seed",      "init_stddev",  "truncation_tol",
      "beta1",      "beta2",     "adam_eps",
  };
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown train config key: " + key);
  TrainConfig c;
  c.d = j.value("d", c.d);
  c.n = j.value("n", c.n);
  c.num_datasets = j.value("num_datasets", c.num_datasets);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.gd_eta = j.value("gd_eta", c.gd_eta);
  c.lr_init = j.value("lr_init", c.lr_init);
  c.lr_min = j.value("lr_min", c.lr_min);
  c.max_iter = j.value("max_iter", c.max_iter);
  if (j.contains("loss_mode")) c.loss_mode = loss_mode_from_string(j.at("loss_mode"));
  if (j.contains("scale_mode")) c.scale_mode = scale_mode_from_string(j.at("scale_mode"));
  c.seed = j.value("seed", c.seed);
  c.init_stddev = j.value("init_stddev", c.init_stddev);
  c.truncation_tol = j.value("truncation_tol", c.truncation_tol);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  if (c.d < 1 || c.n < 1 || c.num_datasets < 1 || c.batch_size < 1 || c.max_iter < 1)
    throw ConfigError("train config: dimensions must be positive");
  if (c.epochs < 0) throw ConfigError("train config: epochs must be >= 0");
  if (!(c.gd_eta > 0) || !(c.lr_init >= 0) || !(c.lr_min >= 0))
    throw ConfigError("train config: rates must be positive");
  return c;
}

void save_lsa_checkpoint(const LsaParams& params, const std::string& path) {
  json j;
  j["d"] = params.d;
  j["n"] = params.n;
  j["V"] = matrix_to_rows(params.V);
  j["A"] = matrix_to_rows(params.A);
  const auto& m = params.train_meta;
  j["train_meta"] = {
      {"epochs_run", m.epochs_run},
      {"final_loss", m.final_loss},
      {"seed", m.seed},
      {"loss_curve", m.loss_curve},
      {"loss_mode", to_string(m.loss_mode)},
      {"gd_eta", m.gd_eta},
      {"lr_init", m.lr_init},
      {"lr_min", m.lr_min},
      {"num_datasets", m.num_datasets},
      {"batch_size", m.batch_size},
      {"max_iter", m.max_iter},
      {"scale_mode", to_string(m.scale_mode)},
  };
  atomic_write_text(path, j.dump(2));
}

LsaParams load_lsa_checkpoint(const std::string& path) {
  json j = json::parse(read_text_file(path));
  LsaParams p;
  p.d = j.at("d").get<int>();
  p.n = j.at("n").get<int>();
  p.V = rows_to_matrix(j.at("V").get<std::vector<std::vector<double>>>());
  p.A = rows_to_matrix(j.at("A").get<std::vector<std::vector<double>>>());
  const int e = 2 * p.d + 2;
  if (p.V.rows() != e || p.V.cols() != e || p.A.rows() != e || p.A.cols() != e)
    throw ConfigError("lsa checkpoint: V/A must be (2d+2) x (2d+2)");
  if (!p.V.allFinite() || !p.A.allFinite())
    throw ConfigError("lsa checkpoint: non-finite parameter entries");
  if (j.contains("train_meta")) {
    const auto& m = j.at("train_meta");
    p.train_meta.epochs_run = m.value("epochs_run", 0);
    p.train_meta.final_loss = m.value("final_loss", 0.0);
    p.train_meta.seed = m.value("seed", std::uint64_t{0});
    p.train_meta.loss_curve = m.value("loss_curve", std::vector<double>{});
    p.train_meta.loss_mode = loss_mode_from_string(m.value("loss_mode", std::string("sum")));
    p.train_meta.gd_eta = m.value("gd_eta", 0.0);
    p.train_meta.lr_init = m.value("lr_init", 0.0);
    p.train_meta.lr_min = m.value("lr_min", 0.0);
    p.train_meta.num_datasets = m.value("num_datasets", 0);
    p.train_meta.batch_size = m.value("batch_size", 0);
    p.train_meta.max_iter = m.value("max_iter", 0);
    p.train_meta.scale_mode =
        scale_mode_from_string(m.value("scale_mode", std::string("inv_dim")));
  }
  return p;
}

}  // namespace a2a

#include <algorithm>
#include <cmath>
#include <numbers>

#include "a2a/lsa.hpp"
#include "a2a/rng.hpp"

namespace a2a {

namespace {

// Everything the forward/backward pass needs from a token matrix reduces to
// Z Z^T and the last column, and Z Z^T is block-diagonal: a fixed data block
// [X;y][X;y]^T and a history block that is a prefix sum of [w_s;1] outer
// products. Training runs on these small blocks instead of materializing Z.
struct DatasetCtx {
  Mat K_data;                    // (d+1) x (d+1)
  std::vector<Mat> hist_prefix;  // hist_prefix[k] = sum_{s<=k} [w_s;1][w_s;1]^T
  std::vector<Vec> iterates;
  std::vector<Vec> grads;
};

DatasetCtx make_dataset_ctx(const TaskData& task, const TrainConfig& cfg) {
  const int d = static_cast<int>(task.X.rows());
  DatasetCtx ctx;
  Mat data(d + 1, task.X.cols());
  data.topRows(d) = task.X;
  data.bottomRows(1) = task.y.transpose();
  ctx.K_data = data * data.transpose();

  const GdTrajectory traj =
      generate_trajectory(task, cfg.gd_eta, cfg.max_iter, cfg.loss_mode, cfg.truncation_tol);
  ctx.iterates.reserve(traj.pairs.size());
  ctx.grads.reserve(traj.pairs.size());
  ctx.hist_prefix.reserve(traj.pairs.size());
  Mat acc = Mat::Zero(d + 1, d + 1);
  for (const auto& [w, g] : traj.pairs) {
    ctx.iterates.push_back(w);
    ctx.grads.push_back(g);
    Vec h(d + 1);
    h.head(d) = w;
    h[d] = 1.0;
    acc += h * h.transpose();
    ctx.hist_prefix.push_back(acc);
  }
  return ctx;
}

struct PairRef {
  int dataset;
  int t;  // presents history w_0..w_{t-1}, regresses the gradient at w_{t-1}
};

struct PairWork {
  double loss = 0.0;
  bool has_grad = false;
  Vec q;       // r / |r|, length d
  Vec Ka;      // K A z_last, length 2d+2
  Vec KVs;     // K V^T s, length 2d+2
  Vec h;       // [w_{t-1}; 1], length d+1
};

// Forward + backward of one (dataset, step) pair on the compact blocks.
PairWork pair_pass(const Mat& V, const Mat& A, const DatasetCtx& ctx, int t, int n,
                   bool want_grad) {
  const int d = static_cast<int>(ctx.iterates.front().size());
  const int e = 2 * d + 2;
  const double inv_n = 1.0 / double(n);

  PairWork w;
  w.h = Vec(d + 1);
  w.h.head(d) = ctx.iterates[size_t(t) - 1];
  w.h[d] = 1.0;

  const Mat& K_hist = ctx.hist_prefix[size_t(t) - 1];
  const Vec a = A.middleCols(d + 1, d + 1) * w.h;  // A z_last
  w.Ka = Vec(e);
  w.Ka.head(d + 1) = ctx.K_data * a.head(d + 1);
  w.Ka.tail(d + 1) = K_hist * a.tail(d + 1);

  const Vec pred =
      ctx.iterates[size_t(t) - 1] + inv_n * (V.middleRows(d + 1, d) * w.Ka);
  const Vec r = pred - ctx.grads[size_t(t) - 1];
  w.loss = r.norm();
  if (!want_grad || w.loss == 0.0) return w;

  w.has_grad = true;
  w.q = r / w.loss;
  const Vec vts = V.middleRows(d + 1, d).transpose() * w.q;  // V^T s
  w.KVs = Vec(e);
  w.KVs.head(d + 1) = ctx.K_data * vts.head(d + 1);
  w.KVs.tail(d + 1) = K_hist * vts.tail(d + 1);
  return w;
}

double cosine_lr(const TrainConfig& cfg, long step, long total_steps) {
  if (total_steps <= 1) return cfg.lr_init;
  const double progress = double(step) / double(total_steps);
  return cfg.lr_min +
         0.5 * (cfg.lr_init - cfg.lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

std::vector<DatasetCtx> build_contexts(const TrainConfig& cfg, std::uint64_t domain) {
  std::vector<DatasetCtx> ctxs;
  ctxs.reserve(size_t(cfg.num_datasets));
  for (int i = 0; i < cfg.num_datasets; ++i) {
    const TaskData task =
        generate_task(cfg.d, cfg.n, cfg.scale_mode, mix_seed(cfg.seed, domain + i));
    ctxs.push_back(make_dataset_ctx(task, cfg));
  }
  return ctxs;
}

std::vector<PairRef> enumerate_pairs(const std::vector<DatasetCtx>& ctxs) {
  std::vector<PairRef> pairs;
  for (std::size_t i = 0; i < ctxs.size(); ++i)
    for (int t = 1; t <= static_cast<int>(ctxs[i].iterates.size()); ++t)
      pairs.push_back({static_cast<int>(i), t});
  return pairs;
}

double mean_loss_over(const Mat& V, const Mat& A, const std::vector<DatasetCtx>& ctxs,
                      const std::vector<PairRef>& pairs, int n) {
  double acc = 0.0;
  for (const PairRef& p : pairs)
    acc += pair_pass(V, A, ctxs[size_t(p.dataset)], p.t, n, false).loss;
  return pairs.empty() ? 0.0 : acc / double(pairs.size());
}

}  // namespace

LsaParams train_lsa(const TrainConfig& cfg) {
  if (cfg.d < 1 || cfg.n < 1 || cfg.num_datasets < 1 || cfg.batch_size < 1)
    throw std::invalid_argument("train_lsa: invalid dimensions in config");
  if (cfg.epochs < 0) throw std::invalid_argument("train_lsa: epochs must be >= 0");

  const int d = cfg.d;
  const int e = 2 * d + 2;
  Rng rng(mix_seed(cfg.seed, 0xC0FFEE));

  LsaParams params;
  params.d = d;
  params.n = cfg.n;
  params.V = rng.normal_matrix(e, e, cfg.init_stddev);  // small-random breaks the V=0 saddle
  params.A = rng.normal_matrix(e, e, cfg.init_stddev);

  const std::vector<DatasetCtx> ctxs = build_contexts(cfg, 0);
  std::vector<PairRef> pairs = enumerate_pairs(ctxs);

  const long batches_per_epoch =
      (long(pairs.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = long(cfg.epochs) * batches_per_epoch;

  Mat mV = Mat::Zero(e, e), vV = Mat::Zero(e, e);
  Mat mA = Mat::Zero(e, e), vA = Mat::Zero(e, e);
  Mat dV(e, e), dA(e, e);
  long step = 0;

  auto& meta = params.train_meta;
  meta.seed = cfg.seed;
  meta.loss_mode = cfg.loss_mode;
  meta.gd_eta = cfg.gd_eta;
  meta.lr_init = cfg.lr_init;
  meta.lr_min = cfg.lr_min;
  meta.num_datasets = cfg.num_datasets;
  meta.batch_size = cfg.batch_size;
  meta.max_iter = cfg.max_iter;
  meta.scale_mode = cfg.scale_mode;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own generator: std::shuffle is not portable.
    for (std::size_t i = pairs.size(); i > 1; --i)
      std::swap(pairs[i - 1], pairs[rng.next_u64() % i]);

    double epoch_loss = 0.0;
    long epoch_batches = 0;
    for (std::size_t begin = 0; begin < pairs.size(); begin += size_t(cfg.batch_size)) {
      const std::size_t end = std::min(pairs.size(), begin + size_t(cfg.batch_size));
      const double inv_batch = 1.0 / double(end - begin);
      const double inv_n = 1.0 / double(cfg.n);
      dV.setZero();
      dA.setZero();
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const PairRef& p = pairs[k];
        const PairWork w =
            pair_pass(params.V, params.A, ctxs[size_t(p.dataset)], p.t, cfg.n, true);
        batch_loss += w.loss;
        if (!w.has_grad) continue;
        const double c = inv_batch * inv_n;
        dV.middleRows(d + 1, d).noalias() += c * (w.q * w.Ka.transpose());
        dA.middleCols(d + 1, d + 1).noalias() += c * (w.KVs * w.h.transpose());
      }
      batch_loss *= inv_batch;
      if (!std::isfinite(batch_loss))
        throw TrainingDivergedError(
            "train_lsa: non-finite loss at epoch " + std::to_string(epoch), epoch);
      epoch_loss += batch_loss;
      ++epoch_batches;

      const double lr = cosine_lr(cfg, step, total_steps);
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, double(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, double(step));
      mV = cfg.beta1 * mV + (1.0 - cfg.beta1) * dV;
      vV = cfg.beta2 * vV + (1.0 - cfg.beta2) * dV.cwiseProduct(dV);
      mA = cfg.beta1 * mA + (1.0 - cfg.beta1) * dA;
      vA = cfg.beta2 * vA + (1.0 - cfg.beta2) * dA.cwiseProduct(dA);
      params.V.array() -=
          lr * (mV.array() / bc1) / ((vV.array() / bc2).sqrt() + cfg.adam_eps);
      params.A.array() -=
          lr * (mA.array() / bc1) / ((vA.array() / bc2).sqrt() + cfg.adam_eps);
    }
    meta.loss_curve.push_back(epoch_batches ? epoch_loss / double(epoch_batches) : 0.0);
    meta.epochs_run = epoch + 1;
  }

  meta.final_loss = mean_loss_over(params.V, params.A, ctxs, pairs, cfg.n);
  return params;
}

double lsa_full_loss(const LsaParams& params, const TrainConfig& cfg) {
  const std::vector<DatasetCtx> ctxs = build_contexts(cfg, 0);
  const std::vector<PairRef> pairs = enumerate_pairs(ctxs);
  return mean_loss_over(params.V, params.A, ctxs, pairs, cfg.n);
}

LsaEvalStats evaluate_lsa_gradient_error(const LsaParams& params, const TrainConfig& cfg,
                                         int num_datasets, std::uint64_t seed) {
  // Domain-separated from the training stream so the tasks are fresh even if
  // the caller reuses the training seed.
  std::vector<double> rel;
  for (int i = 0; i < num_datasets; ++i) {
    const TaskData task = generate_task(cfg.d, cfg.n, cfg.scale_mode,
                                        mix_seed(seed, 0x8000000000000000ull + i));
    const DatasetCtx ctx = make_dataset_ctx(task, cfg);
    for (int t = 1; t <= static_cast<int>(ctx.iterates.size()); ++t) {
      const double gnorm = ctx.grads[size_t(t) - 1].norm();
      if (gnorm == 0.0) continue;
      const PairWork w = pair_pass(params.V, params.A, ctx, t, cfg.n, false);
      rel.push_back(w.loss / gnorm);
    }
  }
  LsaEvalStats stats;
  stats.pair_count = rel.size();
  if (rel.empty()) return stats;
  double acc = 0.0;
  for (double x : rel) acc += x;
  stats.mean_rel_err = acc / double(rel.size());
  std::sort(rel.begin(), rel.end());
  const std::size_t mid = rel.size() / 2;
  stats.median_rel_err =
      rel.size() % 2 ? rel[mid] : 0.5 * (rel[mid - 1] + rel[mid]);
  return stats;
}

std::vector<double> lsa_rollout_errors(const LsaParams& params, const TaskData& task,
                                       double eta, int steps) {
  std::vector<Vec> history{Vec::Zero(task.X.rows())};
  std::vector<double> errs;
  errs.reserve(size_t(steps) + 1);
  errs.push_back((history.back() - task.target).norm());
  for (int k = 0; k < steps; ++k) {
    const Vec g = lsa_predict(params, task, history);
    history.push_back(history.back() - eta * g);
    errs.push_back((history.back() - task.target).norm());
  }
  return errs;
}

}  // namespace a2a

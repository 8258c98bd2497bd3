#include <doctest.h>

#include <cmath>

#include "a2a/lsa.hpp"
#include "a2a/rng.hpp"

using namespace a2a;

namespace {

// Small everything: these tests exercise the training mechanics, not the
// full recipe (the acceptance suite trains at the real hyperparameters).
TrainConfig small_config() {
  TrainConfig cfg;
  cfg.d = 4;
  cfg.n = 8;
  cfg.num_datasets = 8;
  cfg.batch_size = 64;
  cfg.epochs = 40;
  cfg.gd_eta = 0.02;
  cfg.lr_init = 0.01;
  cfg.lr_min = 0.002;
  cfg.max_iter = 60;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("epochs = 0 returns the initial parameters and their loss") {
  TrainConfig cfg = small_config();
  cfg.epochs = 0;
  const LsaParams params = train_lsa(cfg);
  CHECK(params.train_meta.epochs_run == 0);
  CHECK(params.train_meta.loss_curve.empty());
  // final loss is the full-pass loss of the untouched initialization
  CHECK(params.train_meta.final_loss ==
        doctest::Approx(lsa_full_loss(params, cfg)).epsilon(1e-12));
  CHECK(params.train_meta.final_loss > 0.0);
}

TEST_CASE("training is deterministic given the seed") {
  TrainConfig cfg = small_config();
  cfg.epochs = 5;
  const LsaParams a = train_lsa(cfg);
  const LsaParams b = train_lsa(cfg);
  CHECK(a.train_meta.final_loss == b.train_meta.final_loss);  // bitwise
  CHECK((a.V - b.V).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.A - b.A).cwiseAbs().maxCoeff() == 0.0);

  cfg.seed = 12;
  const LsaParams c = train_lsa(cfg);
  CHECK(c.train_meta.final_loss != a.train_meta.final_loss);
}

TEST_CASE("training reduces the loss substantially on a small problem") {
  TrainConfig cfg = small_config();
  const LsaParams params = train_lsa(cfg);
  REQUIRE(params.train_meta.loss_curve.size() == size_t(cfg.epochs));
  const double first = params.train_meta.loss_curve.front();
  const double last = params.train_meta.final_loss;
  CHECK(last < 0.2 * first);
  for (double l : params.train_meta.loss_curve) CHECK(l >= 0.0);
}

TEST_CASE("recorded final loss matches recomputation from the checkpoint") {
  const TrainConfig cfg = small_config();
  const LsaParams params = train_lsa(cfg);
  CHECK(std::abs(lsa_full_loss(params, cfg) - params.train_meta.final_loss) <= 1e-8);
}

TEST_CASE("held-out gradient error is small after training") {
  TrainConfig cfg = small_config();
  cfg.epochs = 80;
  const LsaParams params = train_lsa(cfg);
  const LsaEvalStats stats = evaluate_lsa_gradient_error(params, cfg, 5, 999);
  CHECK(stats.pair_count > 0);
  CHECK(stats.median_rel_err < 0.15);
}

TEST_CASE("trained model works as an in-context optimizer") {
  TrainConfig cfg = small_config();
  cfg.epochs = 80;
  const LsaParams params = train_lsa(cfg);
  int monotone = 0, total = 0;
  for (int k = 0; k < 20; ++k) {
    const TaskData task =
        generate_task(cfg.d, cfg.n, cfg.scale_mode, mix_seed(777, 100 + k));
    const std::vector<double> errs = lsa_rollout_errors(params, task, cfg.gd_eta, 50);
    bool ok = true;
    for (std::size_t i = 0; i + 1 < errs.size(); ++i)
      ok &= errs[i + 1] <= errs[i] + 1e-12;
    monotone += ok ? 1 : 0;
    ++total;
  }
  CHECK(double(monotone) / double(total) >= 0.9);
}

TEST_CASE("non-finite loss surfaces as a training divergence") {
  TrainConfig cfg = small_config();
  cfg.init_stddev = 1e200;  // the first forward pass overflows to inf
  cfg.epochs = 1;
  CHECK_THROWS_AS(train_lsa(cfg), TrainingDivergedError);
  try {
    train_lsa(cfg);
  } catch (const TrainingDivergedError& ex) {
    CHECK(ex.epoch == 0);
  }
}

TEST_CASE("train config JSON round trip and validation") {
  TrainConfig cfg = small_config();
  const TrainConfig back = train_config_from_json(train_config_to_json(cfg));
  CHECK(back.d == cfg.d);
  CHECK(back.n == cfg.n);
  CHECK(back.epochs == cfg.epochs);
  CHECK(back.lr_init == cfg.lr_init);
  CHECK(back.seed == cfg.seed);
  CHECK(back.loss_mode == cfg.loss_mode);

  CHECK_THROWS_AS(train_config_from_json("{\"bogus\": 1}"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json("{\"epochs\": -3}"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json("not json"), ConfigError);
}

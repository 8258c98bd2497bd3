#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "a2a/harness.hpp"
#include "a2a/io.hpp"
#include "a2a/rng.hpp"

using namespace a2a;

TEST_CASE("oracle_gradient closed forms") {
  TaskData task;
  task.X = Mat::Identity(2, 2);
  task.y = Vec::Zero(2);
  task.y[0] = 1.0;
  task.target = task.y;

  // optimum: zero gradient
  CHECK(oracle_gradient(task, task.target, LossMode::Mean).norm() == 0.0);

  // hand evaluation at w = 0, mean mode: X (X^T 0 - y) / n = (-1/2, 0)
  const Vec g = oracle_gradient(task, Vec::Zero(2), LossMode::Mean);
  CHECK(g[0] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(g[1] == 0.0);

  // sum and mean differ exactly by n
  const Vec gs = oracle_gradient(task, Vec::Zero(2), LossMode::Sum);
  CHECK((gs - 2.0 * g).norm() == 0.0);
}

TEST_CASE("interaction bookkeeping: one step records two half-steps") {
  const TaskData t1 = generate_task(4, 8, ScaleMode::Unit, 1);
  const TaskData t2 = generate_task(4, 8, ScaleMode::Unit, 2);
  ExactOracleBackend a(LossMode::Mean), b(LossMode::Mean);
  const Trajectory traj = run_interaction(a, b, t1, t2, 0.05, 1);
  CHECK(traj.iterates.size() == 3);
  CHECK(traj.err_w.size() == 1);
  CHECK(traj.err_u.size() == 1);
  CHECK(traj.iterates.front().norm() == 0.0);
}

TEST_CASE("exact-oracle interaction equals the closed alternating dynamics") {
  for (int k = 0; k < 20; ++k) {
    TaskData tw = generate_task(10, 20, ScaleMode::Unit, 100 + k);
    TaskData tu = generate_task(10, 20, ScaleMode::Unit, 200 + k);
    ExactOracleBackend bw(LossMode::Mean), bu(LossMode::Mean);
    const Trajectory via_backends = run_interaction(bw, bu, tw, tu, 0.01, 100);

    const AgentSpec aw(sample_covariance(tw.X), tw.target, 0.01);
    const AgentSpec au(sample_covariance(tu.X), tu.target, 0.01);
    const Trajectory closed = run_alternating(aw, au, 100, 0.0);

    REQUIRE(via_backends.iterates.size() == closed.iterates.size());
    for (std::size_t i = 0; i < closed.iterates.size(); ++i)
      CHECK((via_backends.iterates[i] - closed.iterates[i]).norm() <= 1e-12);
  }
}

TEST_CASE("aligned objectives converge through the harness too") {
  TaskData tw = generate_task(6, 12, ScaleMode::Unit, 5);
  const TaskData tu = relabeled_task(generate_task(6, 12, ScaleMode::Unit, 6), tw.target);
  ExactOracleBackend a(LossMode::Mean), b(LossMode::Mean);
  InteractionOptions opts;
  opts.stop_tol = 1e-12;
  const Trajectory traj = run_interaction(a, b, tw, tu, 0.05, 10000, opts);
  CHECK(traj.err_w.back() < 1e-6);
  CHECK(traj.err_u.back() < 1e-6);
}

TEST_CASE("backend failures carry the turn index") {
  struct Broken final : AgentBackend {
    Vec gradient(const TaskData&, const std::vector<Vec>&) override {
      throw std::runtime_error("boom");
    }
    std::string name() const override { return "broken"; }
  };
  const TaskData t = generate_task(3, 6, ScaleMode::Unit, 7);
  Broken bad;
  ExactOracleBackend good(LossMode::Mean);
  CHECK_THROWS_AS(run_interaction(bad, good, t, t, 0.05, 3), BackendError);
  try {
    run_interaction(bad, good, t, t, 0.05, 3);
  } catch (const BackendError& ex) {
    CHECK(ex.turn == 0);
  }
}

TEST_CASE("wrong-length backend output is a backend failure, not a crash") {
  struct WrongShape final : AgentBackend {
    Vec gradient(const TaskData&, const std::vector<Vec>&) override {
      return Vec::Zero(2);
    }
    std::string name() const override { return "wrong"; }
  };
  const TaskData t = generate_task(3, 6, ScaleMode::Unit, 8);
  WrongShape bad;
  ExactOracleBackend good(LossMode::Mean);
  CHECK_THROWS_AS(run_interaction(bad, good, t, t, 0.05, 3), BackendError);
}

TEST_CASE("effective geometry follows the gradient convention") {
  const TaskData t = generate_task(5, 9, ScaleMode::Unit, 9);
  const Mat mean = effective_geometry(t.X, LossMode::Mean).mat();
  const Mat sum = effective_geometry(t.X, LossMode::Sum).mat();
  CHECK((sum - 9.0 * mean).cwiseAbs().maxCoeff() <= 1e-12 * sum.cwiseAbs().maxCoeff());
}

TEST_CASE("make_gap produces the three settings") {
  Rng rng(10);
  const Vec w = rng.normal_vector(6);
  CHECK((make_gap(w, GapType::Opposite, 2.0, 1) + w).norm() == 0.0);
  CHECK((make_gap(w, GapType::Scaled, 2.0, 1) - 2.0 * w).norm() == 0.0);
  const Vec ortho = make_gap(w, GapType::Orthogonal, 2.0, 1);
  CHECK(std::abs(ortho.dot(w)) <= 1e-9 * w.norm() * ortho.norm());
  CHECK(ortho.norm() == doctest::Approx(w.norm()).epsilon(1e-12));
}

TEST_CASE("experiment config JSON round trip, seeds expansion, validation") {
  ExperimentConfig c;
  c.kind = ExperimentKind::Attack;
  c.seeds = {3, 4, 5};
  c.gap_type = GapType::Scaled;
  c.backend_w.kind = "exact";
  const ExperimentConfig back = experiment_config_from_json(experiment_config_to_json(c));
  CHECK(back.kind == ExperimentKind::Attack);
  CHECK(back.seeds == c.seeds);
  CHECK(back.gap_type == GapType::Scaled);
  CHECK(experiment_config_hash(back) == experiment_config_hash(c));

  const ExperimentConfig ranged = experiment_config_from_json(
      R"({"kind": "attack", "seeds": {"start": 10, "count": 3}})");
  CHECK(ranged.seeds == std::vector<std::uint64_t>{10, 11, 12});

  CHECK_THROWS_AS(experiment_config_from_json("{"), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"typo_key": 1})"), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"eta": -1})"), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"seeds": []})"), ConfigError);
  CHECK_THROWS_AS(
      experiment_config_from_json(R"({"backend_w": {"kind": "lsa"}})"),
      ConfigError);
  CHECK_THROWS_AS(
      experiment_config_from_json(R"({"backend_w": {"kind": "warp"}})"),
      ConfigError);
}

TEST_CASE("converge experiment: plateaus track predictions") {
  ExperimentConfig c;
  c.kind = ExperimentKind::Converge;
  c.d = 8;
  c.n = 16;
  c.eta = 0.02;
  c.turns = 200000;
  c.stop_tol = 1e-11;
  c.seeds = {1, 2, 3};
  c.scale_mode = ScaleMode::Unit;
  c.theta = 2.0;
  const ExperimentReport report = run_converge(c);
  REQUIRE(report.converge_rows.size() == 3);
  for (const auto& row : report.converge_rows) {
    CHECK(row.stable);
    CHECK(row.converged);
    // simulated plateau within O(eta) of the closed-form prediction
    CHECK(std::abs(row.plateau_w - row.predicted_w) <= 10 * c.eta);
    CHECK(std::abs(row.plateau_u - row.predicted_u) <= 10 * c.eta);
  }
  CHECK(report.trajectories.size() == 3);
}

TEST_CASE("attack experiment with exact agents: full success, both modes") {
  for (const LossMode mode : {LossMode::Mean, LossMode::Sum}) {
    ExperimentConfig c;
    c.kind = ExperimentKind::Attack;
    c.d = 10;
    c.n = 20;
    c.eta = 0.005;
    c.turns = 400;
    c.seeds = {1, 2, 3, 4, 5, 6, 7, 8};
    c.loss_mode = mode;
    c.gap_type = GapType::Opposite;
    const ExperimentReport report = attack_experiment(c);
    CHECK(report.failed_constructions == 0);
    CHECK(report.success_rate == 1.0);
    for (const auto& row : report.attack_rows) {
      CHECK(row.stable);
      CHECK(std::abs(row.final_err_w - row.victim_residual_pred) <= 1e-6);
      CHECK(row.final_err_u <= row.eps_attacker);
    }
    CHECK(report.mean_err_w_curve.size() == 400);
    CHECK(report.mean_err_u_curve.size() == 400);
  }
}

TEST_CASE("attack experiment covers orthogonal and scaled gaps") {
  for (const GapType gap : {GapType::Orthogonal, GapType::Scaled}) {
    ExperimentConfig c;
    c.kind = ExperimentKind::Attack;
    c.d = 10;
    c.n = 20;
    c.eta = 0.005;
    c.turns = 400;
    c.seeds = {11, 12, 13};
    c.gap_type = gap;
    const ExperimentReport report = attack_experiment(c);
    CHECK(report.success_rate == 1.0);
  }
}

TEST_CASE("sweep experiment: rows populated, envelopes contain plateaus") {
  ExperimentConfig c;
  c.kind = ExperimentKind::AngleSweep;
  c.d = 8;
  c.n = 16;
  c.eta = 0.01;
  c.turns = 400000;
  c.stop_tol = 1e-11;
  c.seeds = {1, 2};
  c.scale_mode = ScaleMode::Unit;
  c.theta_points = 5;
  const ExperimentReport report = sweep_angles(c);
  REQUIRE(report.sweep_rows.size() == 10);
  for (const auto& row : report.sweep_rows) {
    CHECK(row.stable);
    CHECK(row.converged);
    CHECK(row.plateau_u_norm >= row.lower_u - 1e-6);
    CHECK(row.plateau_u_norm <= row.upper_u + 10 * c.eta);
    CHECK(row.plateau_w_norm >= row.lower_w - 1e-6);
    CHECK(row.plateau_w_norm <= row.upper_w + 10 * c.eta);
  }
  // paired seeds: the seed-averaged plateau grows with the angle
  for (std::size_t t = 0; t + 1 < report.theta_grid.size(); ++t) {
    CHECK(report.theta_mean_plateau_w[t + 1] >= report.theta_mean_plateau_w[t] - 1e-9);
    CHECK(report.theta_mean_plateau_u[t + 1] >= report.theta_mean_plateau_u[t] - 1e-9);
  }
}

TEST_CASE("experiment outputs are written atomically and reruns are byte-identical") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "a2a_test_out";
  fs::remove_all(dir);

  ExperimentConfig c;
  c.kind = ExperimentKind::AngleSweep;
  c.d = 4;
  c.n = 8;
  c.eta = 0.02;
  c.turns = 30000;
  c.stop_tol = 1e-10;
  c.seeds = {1, 2};
  c.scale_mode = ScaleMode::Unit;
  c.theta_points = 3;
  c.out_dir = (dir / "run").string();

  const ExperimentReport report = sweep_angles(c);
  write_experiment_outputs(report);
  CHECK(fs::exists(dir / "run" / "report.json"));
  CHECK(fs::exists(dir / "run" / "plateaus.csv"));
  CHECK(fs::exists(dir / "run" / "config.json"));
  const std::string first = read_text_file((dir / "run" / "plateaus.csv").string());

  const ExperimentReport again = sweep_angles(c);
  write_experiment_outputs(again);
  CHECK(read_text_file((dir / "run" / "plateaus.csv").string()) == first);

  // exact column order of the sweep CSV
  const auto header_at = first.find('\n') + 1;
  const std::string header = first.substr(header_at, first.find('\n', header_at) - header_at);
  CHECK(header ==
        "theta,seed,plateau_w,plateau_u,lower_w,upper_w,lower_u,upper_u,predicted_w,"
        "predicted_u");
  fs::remove_all(dir);
}

TEST_CASE("trajectory CSV carries the documented columns") {
  const TaskData tw = generate_task(3, 6, ScaleMode::Unit, 30);
  const TaskData tu = generate_task(3, 6, ScaleMode::Unit, 31);
  ExactOracleBackend a(LossMode::Mean), b(LossMode::Mean);
  const Trajectory traj = run_interaction(a, b, tw, tu, 0.05, 4);
  const ObjectivePair pair = ObjectivePair::from_targets(tw.target, tu.target);
  const std::string csv = trajectory_to_csv(traj, pair, "deadbeef");
  CHECK(csv.find("# config_hash=deadbeef") == 0);
  CHECK(csv.find("turn,speaker,err_w,err_u,state_0,state_1,state_2\n") != std::string::npos);
  CHECK(csv.find("0,init,") != std::string::npos);
  CHECK(csv.find("1,W,") != std::string::npos);
  CHECK(csv.find("2,U,") != std::string::npos);
}

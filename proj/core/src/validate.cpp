#include "a2a/validate.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "a2a/adversary.hpp"
#include "a2a/agents.hpp"
#include "a2a/dynamics.hpp"
#include "a2a/geometry.hpp"
#include "a2a/llm_bridge.hpp"
#include "a2a/lsa.hpp"
#include "a2a/predictor.hpp"
#include "a2a/rng.hpp"

namespace a2a {

namespace {

constexpr double kPi = std::numbers::pi;

SymMatrix random_spd(int d, std::uint64_t seed, int n = 0) {
  if (n == 0) n = 2 * d;
  return sample_covariance(generate_task(d, n, ScaleMode::Unit, seed).X);
}

struct Suite {
  bool fast;
  std::vector<ValidationResult> results;

  void check(const std::string& name, const std::function<std::string()>& body) {
    ValidationResult r{name, true, ""};
    try {
      r.detail = body();  // empty string = pass, else failure detail
      r.passed = r.detail.empty();
    } catch (const std::exception& ex) {
      r.passed = false;
      r.detail = std::string("exception: ") + ex.what();
    }
    results.push_back(std::move(r));
  }
};

std::string fail_if(bool bad, const std::string& msg) { return bad ? msg : std::string{}; }

}  // namespace

std::vector<ValidationResult> run_validation_suite(bool fast) {
  Suite s{fast, {}};
  const int trials = fast ? 50 : 1000;

  s.check("geometry.covariance_psd", [&] {
    for (int k = 0; k < trials; ++k) {
      const TaskData t = generate_task(8, 5 + k % 10, ScaleMode::Unit, 100 + k);
      Eigen::SelfAdjointEigenSolver<Mat> es(sample_covariance(t.X).mat(),
                                            Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues().minCoeff();
      const double hi = es.eigenvalues().maxCoeff();
      if (lo < -1e-10 * std::max(1.0, hi))
        return "negative eigenvalue " + std::to_string(lo);
    }
    return std::string{};
  });

  s.check("geometry.spd_factor_roundtrip", [&] {
    for (int k = 0; k < trials / 5 + 1; ++k) {
      const SymMatrix S = random_spd(10, 200 + k);
      const Mat L = spd_factor(S);
      const double rel = (L * L.transpose() - S.mat()).norm() / S.mat().norm();
      if (rel > 1e-10) return "factor error " + std::to_string(rel);
    }
    return std::string{};
  });

  s.check("geometry.projector_scale_invariance", [&] {
    Rng rng(7);
    for (int k = 0; k < trials / 5 + 1; ++k) {
      const Vec v = rng.normal_vector(10);
      const Mat diff = projector_onto(v).mat() - projector_onto(3.75 * v).mat();
      if (diff.cwiseAbs().maxCoeff() > 1e-12) return std::string("projector not scale-free");
    }
    return std::string{};
  });

  s.check("geometry.pair_with_angle", [&] {
    Rng rng(11);
    for (int k = 0; k < trials; ++k) {
      const double theta = rng.uniform() * kPi;
      const double nw = 0.5 + rng.uniform(), nu = 0.5 + rng.uniform();
      const ObjectivePair p = pair_with_angle(10, theta, nw, nu, 3000 + k);
      if (std::abs(p.w_star.norm() - nw) > 1e-9 || std::abs(p.u_star.norm() - nu) > 1e-9)
        return std::string("norm mismatch");
      if (std::abs(angle_between(p.w_star, p.u_star) - theta) > 1e-9)
        return std::string("angle mismatch");
    }
    return std::string{};
  });

  s.check("dynamics.unique_fixed_point", [&] {
    const SymMatrix S_w = random_spd(6, 41), S_u = random_spd(6, 42);
    Rng rng(43);
    const AgentSpec aw(S_w, rng.normal_vector(6), 0.05);
    const AgentSpec au(S_u, rng.normal_vector(6), 0.05);
    const FixedPoint fp = solve_fixed_point(aw, au);
    for (int k = 0; k < (fast ? 10 : 100); ++k) {
      RunOptions opts;
      opts.max_turns = 200000;
      opts.stop_tol = 1e-13;
      opts.initial = rng.normal_vector(6);
      const Trajectory t = run_alternating(aw, au, opts);
      if ((t.iterates.back() - fp.u_inf).norm() > 1e-8)
        return std::string("limit depends on the initial history");
    }
    return std::string{};
  });

  s.check("dynamics.solver_matches_iteration", [&] {
    for (int k = 0; k < (fast ? 5 : 25); ++k) {
      const SymMatrix S_w = random_spd(10, 500 + k), S_u = random_spd(10, 600 + k);
      Rng rng(700 + k);
      const AgentSpec aw(S_w, rng.normal_vector(10), 0.05);
      const AgentSpec au(S_u, rng.normal_vector(10), 0.05);
      RunOptions opts;
      opts.max_turns = 500000;
      opts.stop_tol = 1e-13;
      const Trajectory t = run_alternating(aw, au, opts);
      const FixedPoint fp = solve_fixed_point(aw, au);
      const double gap = (t.iterates.back() - fp.u_inf).norm();
      if (gap > std::max(1e-8, 10 * opts.stop_tol))
        return "solver/iteration gap " + std::to_string(gap);
    }
    return std::string{};
  });

  s.check("dynamics.monotone_tail", [&] {
    const SymMatrix S_w = random_spd(8, 81), S_u = random_spd(8, 82);
    Rng rng(83);
    const AgentSpec aw(S_w, rng.normal_vector(8), 0.05);
    const AgentSpec au(S_u, rng.normal_vector(8), 0.05);
    const Trajectory t = run_alternating(aw, au, 5000, 0.0);
    std::vector<double> disp;
    for (std::size_t k = 2; k + 2 < t.iterates.size(); k += 2)
      disp.push_back((t.iterates[k + 2] - t.iterates[k]).norm());
    // geometric decay must kick in; allow a short transient prefix
    for (std::size_t k = disp.size() / 4; k + 1 < disp.size(); ++k)
      if (disp[k + 1] > disp[k] * (1 + 1e-9) && disp[k] > 1e-14)
        return std::string("displacement increased in the tail");
    return std::string{};
  });

  s.check("predictor.residual_identity", [&] {
    for (int k = 0; k < trials / 5 + 1; ++k) {
      const SymMatrix S_w = random_spd(9, 900 + k), S_u = random_spd(9, 950 + k);
      const ObjectivePair p = pair_with_angle(9, 1.1, 1.0, 1.3, 990 + k);
      const PlateauPrediction pred = plateau_prediction(S_w, S_u, p, 0.005);
      if ((pred.resid_w - pred.resid_u - p.delta).norm() > 1e-10)
        return std::string("resid_w - resid_u != delta");
    }
    return std::string{};
  });

  s.check("predictor.commuting_matches_general", [&] {
    Rng rng(1234);
    for (int k = 0; k < trials / 5 + 1; ++k) {
      // simultaneously diagonalizable pair from a shared random basis
      const Mat Q = spd_factor(random_spd(7, 1300 + k));
      const Eigen::HouseholderQR<Mat> qr(Q);
      const Mat U = qr.householderQ();
      Vec lw(7), lu(7);
      for (int i = 0; i < 7; ++i) {
        lw[i] = 0.2 + rng.uniform();
        lu[i] = 0.2 + rng.uniform();
      }
      const SymMatrix S_w(Mat(U * lw.asDiagonal() * U.transpose()));
      const SymMatrix S_u(Mat(U * lu.asDiagonal() * U.transpose()));
      const ObjectivePair p = pair_with_angle(7, 2.0, 1.0, 1.0, 1400 + k);
      const PlateauPrediction direct = plateau_prediction(S_w, S_u, p, 0.005);
      const CommutingPlateaus spectral =
          commuting_plateaus(lw, lu, U.transpose() * p.delta);
      if (std::abs(direct.err_u * direct.err_u - spectral.err_u_sq) > 1e-10 ||
          std::abs(direct.err_w * direct.err_w - spectral.err_w_sq) > 1e-10)
        return std::string("spectral route disagrees with direct route");
    }
    return std::string{};
  });

  s.check("predictor.envelopes_monotone", [&] {
    double prev_min = -1, prev_max = -1;
    for (int i = 0; i < 181; ++i) {
      const double theta = kPi * double(i) / 180.0;
      const double rmin = r_min_envelope(theta), rmax = r_max_envelope(theta);
      if (rmin < prev_min - 1e-15 || rmax < prev_max - 1e-15)
        return std::string("envelope decreased at grid point " + std::to_string(i));
      prev_min = rmin;
      prev_max = rmax;
    }
    return std::string{};
  });

  s.check("adversary.construction_guarantee", [&] {
    for (int k = 0; k < trials / 5 + 1; ++k) {
      const SymMatrix S_w = random_spd(10, 2000 + k);
      const ObjectivePair p = pair_with_angle(10, 2.5, 1.0, 1.0, 2100 + k);
      const AttackDesign design = design_attack(S_w, p, 0.005, 0.1, 20);
      if (!design.diagnosis.holds) return std::string("criterion does not hold");
      if (design.diagnosis.cancel_norm > 1e-10 * p.delta.norm())
        return std::string("cancellation is not exact");
      if (!stability_check(0.005, S_w, design.S_u).stable)
        return std::string("design is unstable");
      const double rel =
          (design.X_u * design.X_u.transpose() / 20.0 - design.S_u.mat()).norm() /
          design.S_u.mat().norm();
      if (rel > 1e-9) return std::string("realization infidelity");
    }
    return std::string{};
  });

  s.check("adversary.criterion_implies_outcome", [&] {
    for (int k = 0; k < (fast ? 10 : 100); ++k) {
      const SymMatrix S_w = random_spd(10, 2500 + k);
      const ObjectivePair p = pair_with_angle(10, 1.7, 1.0, 1.0, 2600 + k);
      const AttackDesign design = design_attack(S_w, p, 0.005, 0.1, 20);
      const AgentSpec aw(S_w, p.w_star, 0.005);
      const AgentSpec au(design.S_u, p.u_star, 0.005);
      const Trajectory t = run_alternating(aw, au, 20000, 1e-13);
      if (t.err_u.back() > 1e-6 * (1 + p.u_star.norm()))
        return std::string("attacker did not converge");
      const double resid = victim_residual_norm(S_w, p, 0.005);
      if (std::abs(t.err_w.back() - resid) > 1e-6)
        return std::string("victim residual does not match the closed form");
    }
    return std::string{};
  });

  s.check("lsa.forward_matches_naive", [&] {
    Rng rng(3100);
    for (int k = 0; k < trials / 5 + 1; ++k) {
      const int d = 1 + int(rng.next_u64() % 4), n = 1 + int(rng.next_u64() % 5);
      const TaskData task = generate_task(d, n, ScaleMode::Unit, 3200 + k);
      std::vector<Vec> history;
      const int hist = 1 + int(rng.next_u64() % 3);
      for (int h = 0; h < hist; ++h) history.push_back(rng.normal_vector(d));
      const TokenMatrix Z = build_tokens(task, history);
      LsaParams params = LsaParams::zeros(d, n);
      params.V = rng.normal_matrix(2 * d + 2, 2 * d + 2);
      params.A = rng.normal_matrix(2 * d + 2, 2 * d + 2);
      const Mat& M = Z.entries;
      const auto rows = M.rows(), cols = M.cols();
      Mat naive = Mat::Zero(rows, cols);  // triple-loop f(Z), no matrix algebra
      for (Eigen::Index c = 0; c < cols; ++c) {
        Vec az = Vec::Zero(rows);
        for (Eigen::Index i = 0; i < rows; ++i)
          for (Eigen::Index j = 0; j < rows; ++j) az[i] += params.A(i, j) * M(j, c);
        Vec zaz = Vec::Zero(cols);
        for (Eigen::Index cc = 0; cc < cols; ++cc)
          for (Eigen::Index i = 0; i < rows; ++i) zaz[cc] += M(i, cc) * az[i];
        for (Eigen::Index i = 0; i < rows; ++i) {
          double acc = 0;
          for (Eigen::Index cc = 0; cc < cols; ++cc) {
            double vz = 0;
            for (Eigen::Index j = 0; j < rows; ++j) vz += params.V(i, j) * M(j, cc);
            acc += vz * zaz[cc];
          }
          naive(i, c) = M(i, c) + acc / double(n);
        }
      }
      const LsaOutput out = lsa_forward(Z, params);
      if ((naive - out.Z_out).cwiseAbs().maxCoeff() > 1e-12)
        return std::string("forward differs from the naive evaluation");
    }
    return std::string{};
  });

  s.check("lsa.analytic_grad_matches_fd", [&] {
    Rng rng(3300);
    const TaskData task = generate_task(2, 3, ScaleMode::Unit, 3301);
    std::vector<Vec> history{Vec::Zero(2), rng.normal_vector(2)};
    const TokenMatrix Z = build_tokens(task, history);
    LsaParams params = LsaParams::zeros(2, 3);
    params.V = rng.normal_matrix(6, 6, 0.3);
    params.A = rng.normal_matrix(6, 6, 0.3);
    const Vec target = rng.normal_vector(2);
    const LsaPairGrad grad = lsa_pair_loss_grad(params, Z, target);
    const double h = 1e-6;
    for (int which = 0; which < 2; ++which) {
      Mat& theta = which == 0 ? params.V : params.A;
      const Mat& analytic = which == 0 ? grad.dV : grad.dA;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          const double keep = theta(i, j);
          theta(i, j) = keep + h;
          const double up = lsa_pair_loss_grad(params, Z, target).loss;
          theta(i, j) = keep - h;
          const double down = lsa_pair_loss_grad(params, Z, target).loss;
          theta(i, j) = keep;
          const double fd = (up - down) / (2 * h);
          const double denom = std::max(std::abs(fd), 1e-8);
          if (std::abs(fd - analytic(i, j)) / denom > 1e-4)
            return std::string("gradient mismatch at a parameter entry");
        }
    }
    return std::string{};
  });

  s.check("harness.interaction_matches_closed_dynamics", [&] {
    for (int k = 0; k < (fast ? 5 : 20); ++k) {
      TaskData tw = generate_task(8, 16, ScaleMode::Unit, 4000 + k);
      TaskData tu = generate_task(8, 16, ScaleMode::Unit, 4100 + k);
      ExactOracleBackend bw(LossMode::Mean), bu(LossMode::Mean);
      const Trajectory ti = run_interaction(bw, bu, tw, tu, 0.05, 50);
      const AgentSpec aw(sample_covariance(tw.X), tw.target, 0.05);
      const AgentSpec au(sample_covariance(tu.X), tu.target, 0.05);
      const Trajectory tc = run_alternating(aw, au, 50, 0.0);
      for (std::size_t i = 0; i < ti.iterates.size(); ++i)
        if ((ti.iterates[i] - tc.iterates[i]).norm() > 1e-12)
          return std::string("trajectories diverge at half-step " + std::to_string(i));
    }
    return std::string{};
  });

  s.check("bridge.prompt_rendering_deterministic", [&] {
    const TaskData task = generate_task(3, 4, ScaleMode::Unit, 5000);
    std::vector<Vec> history{Vec::Zero(3)};
    const Prompts a = render_prompts(3, 4, task, history[0], {});
    const Prompts b = render_prompts(3, 4, task, history[0], {});
    return fail_if(a.system != b.system || a.user != b.user, "prompts not byte-stable");
  });

  return s.results;
}

}  // namespace a2a

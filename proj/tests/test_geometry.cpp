#include <doctest.h>

#include <cmath>
#include <numbers>

#include "a2a/geometry.hpp"
#include "a2a/rng.hpp"

using namespace a2a;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("generate_task shapes, labels and determinism") {
  const TaskData t = generate_task(10, 20, ScaleMode::InvDim, 7);
  CHECK(t.X.rows() == 10);
  CHECK(t.X.cols() == 20);
  CHECK(t.y.size() == 20);
  CHECK(t.target.size() == 10);
  CHECK((t.y - t.X.transpose() * t.target).norm() == 0.0);  // labels exact by construction

  const TaskData again = generate_task(10, 20, ScaleMode::InvDim, 7);
  CHECK(t.X == again.X);
  CHECK(t.y == again.y);
  CHECK(t.target == again.target);

  const TaskData other = generate_task(10, 20, ScaleMode::InvDim, 8);
  CHECK(t.X != other.X);
}

TEST_CASE("generate_task 1x1 algebra") {
  const TaskData t = generate_task(1, 1, ScaleMode::Unit, 0);
  CHECK(t.y[0] == t.X(0, 0) * t.target[0]);
}

TEST_CASE("generate_task entry variance tracks the scale mode") {
  // aggregate over many seeds, d=10 n=20: inv_dim variance ~ 0.1, unit ~ 1
  for (const auto [mode, want] :
       {std::pair{ScaleMode::InvDim, 0.1}, std::pair{ScaleMode::Unit, 1.0}}) {
    double acc = 0.0;
    std::size_t count = 0;
    for (int s = 0; s < 200; ++s) {
      const TaskData t = generate_task(10, 20, mode, 1000 + s);
      acc += t.X.squaredNorm();
      count += t.X.size();
    }
    const double var = acc / double(count);
    CHECK(var == doctest::Approx(want).epsilon(0.05));
  }
}

TEST_CASE("generate_task rejects bad dimensions") {
  CHECK_THROWS_AS(generate_task(0, 5, ScaleMode::Unit, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_task(5, 0, ScaleMode::Unit, 1), std::invalid_argument);
}

TEST_CASE("sample_covariance small closed forms") {
  // identity columns: S = I/2
  Mat X = Mat::Identity(2, 2);
  CHECK((sample_covariance(X).mat() - 0.5 * Mat::Identity(2, 2)).norm() == 0.0);

  // single column: rank-1 outer product
  Vec v(3);
  v << 1.0, -2.0, 0.5;
  const SymMatrix S = sample_covariance(v);
  CHECK((S.mat() - v * v.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("sample_covariance matches the triple-loop oracle") {
  const TaskData t = generate_task(10, 20, ScaleMode::Unit, 99);
  const Mat S = sample_covariance(t.X).mat();
  Mat oracle = Mat::Zero(10, 10);  // O(d^2 n) explicit sum
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      for (int k = 0; k < 20; ++k) oracle(i, j) += t.X(i, k) * t.X(j, k) / 20.0;
  CHECK((S - oracle).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("sample_covariance is PSD for random data") {
  for (int s = 0; s < 25; ++s) {
    const TaskData t = generate_task(6, 3 + s % 8, ScaleMode::Unit, 500 + s);
    Eigen::SelfAdjointEigenSolver<Mat> es(sample_covariance(t.X).mat(),
                                          Eigen::EigenvaluesOnly);
    const double hi = es.eigenvalues().maxCoeff();
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, hi));
  }
}

TEST_CASE("projector_onto closed forms and properties") {
  Vec e1 = Vec::Zero(3);
  e1[0] = 1.0;
  Mat want = Mat::Zero(3, 3);
  want(0, 0) = 1.0;
  CHECK((projector_onto(e1).mat() - want).norm() == 0.0);

  Vec ones(2);
  ones << 1.0, 1.0;
  CHECK((projector_onto(ones).mat() - Mat::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() <=
        1e-15);

  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const Vec v = rng.normal_vector(10);
    const Mat P = projector_onto(v).mat();
    CHECK((P * P - P).cwiseAbs().maxCoeff() <= 1e-12);   // idempotent
    CHECK((P * v - v).norm() <= 1e-12 * v.norm());       // fixes v
    CHECK(P.trace() == doctest::Approx(1.0).epsilon(1e-12));
    // invariant to positive rescaling
    CHECK((projector_onto(2.5 * v).mat() - P).cwiseAbs().maxCoeff() <= 1e-12);
  }

  CHECK_THROWS_AS(projector_onto(Vec::Zero(4)), DegenerateInputError);
}

TEST_CASE("spd_factor reconstructs, including rank-deficient inputs") {
  CHECK((spd_factor(SymMatrix::identity(4)) *
             spd_factor(SymMatrix::identity(4)).transpose() -
         Mat::Identity(4, 4))
            .norm() <= 1e-12);

  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 4.0;
  D(1, 1) = 9.0;
  const Mat L = spd_factor(SymMatrix(D));
  CHECK((L * L.transpose() - D).cwiseAbs().maxCoeff() <= 1e-12);

  // projector: PSD with a zero eigenvalue must factor cleanly
  Vec v(5);
  v << 1, 2, 3, 4, 5;
  const SymMatrix P = projector_onto(v);
  const Mat Lp = spd_factor(P);
  CHECK((Lp * Lp.transpose() - P.mat()).norm() <= 1e-10);

  // random PSD round trip
  for (int s = 0; s < 20; ++s) {
    const SymMatrix S = sample_covariance(generate_task(10, 20, ScaleMode::Unit, s).X);
    const Mat Ls = spd_factor(S);
    CHECK((Ls * Ls.transpose() - S.mat()).norm() <= 1e-10 * S.mat().norm());
  }

  Mat neg = -Mat::Identity(3, 3);
  CHECK_THROWS_AS(spd_factor(SymMatrix(neg)), NotPsdError);
}

TEST_CASE("pair_with_angle poles and right angle") {
  const ObjectivePair zero = pair_with_angle(2, 0.0, 1.0, 1.0, 5);
  CHECK((zero.u_star - zero.w_star).norm() <= 1e-12);

  const ObjectivePair pi = pair_with_angle(2, kPi, 1.0, 1.0, 5);
  CHECK((pi.u_star + pi.w_star).norm() <= 1e-12);

  const ObjectivePair right = pair_with_angle(10, kPi / 2, 1.0, 1.0, 5);
  CHECK(std::abs(right.w_star.dot(right.u_star)) <= 1e-9);

  CHECK_THROWS_AS(pair_with_angle(1, 0.5, 1.0, 1.0, 5), InfeasibleAngleError);
  CHECK_THROWS_AS(pair_with_angle(3, -0.1, 1.0, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(pair_with_angle(3, 0.5, 0.0, 1.0, 5), std::invalid_argument);
}

TEST_CASE("pair_with_angle hits requested angle and norms across 1000 seeds") {
  Rng rng(123);
  for (int k = 0; k < 1000; ++k) {
    const double theta = rng.uniform() * kPi;
    const double nw = 0.25 + 2.0 * rng.uniform();
    const double nu = 0.25 + 2.0 * rng.uniform();
    const ObjectivePair p = pair_with_angle(7, theta, nw, nu, 10000 + k);
    CHECK(std::abs(p.w_star.norm() - nw) <= 1e-9);
    CHECK(std::abs(p.u_star.norm() - nu) <= 1e-9);
    CHECK(std::abs(angle_between(p.w_star, p.u_star) - theta) <= 1e-9);
    CHECK((p.delta - (p.u_star - p.w_star)).norm() == 0.0);
  }
}

TEST_CASE("SymMatrix validates symmetry and the psd flag") {
  Mat bad(2, 2);
  bad << 1.0, 0.5, 0.2, 1.0;
  CHECK_THROWS_AS(SymMatrix{bad}, std::invalid_argument);

  Mat indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  CHECK_NOTHROW(SymMatrix{indef});  // symmetric is enough without the flag
  CHECK_THROWS_AS(SymMatrix(indef, true), NotPsdError);
}

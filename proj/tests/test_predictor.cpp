#include <doctest.h>

#include <cmath>
#include <numbers>

#include "a2a/dynamics.hpp"
#include "a2a/predictor.hpp"
#include "a2a/rng.hpp"

using namespace a2a;

namespace {

constexpr double kPi = std::numbers::pi;

SymMatrix random_spd(int d, std::uint64_t seed) {
  return sample_covariance(generate_task(d, 2 * d, ScaleMode::Unit, seed).X);
}

}  // namespace

TEST_CASE("isotropic geometries split the gap evenly") {
  Rng rng(1);
  const ObjectivePair pair =
      ObjectivePair::from_targets(rng.normal_vector(6), rng.normal_vector(6));
  const PlateauPrediction p =
      plateau_prediction(SymMatrix::identity(6), SymMatrix::identity(6), pair, 0.005);
  CHECK(p.err_u == doctest::Approx(pair.delta.norm() / 2).epsilon(1e-12));
  CHECK(p.err_w == doctest::Approx(pair.delta.norm() / 2).epsilon(1e-12));
}

TEST_CASE("aligned objectives predict zero error") {
  Rng rng(2);
  const Vec shared = rng.normal_vector(5);
  const ObjectivePair pair = ObjectivePair::from_targets(shared, shared);
  const PlateauPrediction p =
      plateau_prediction(random_spd(5, 3), random_spd(5, 4), pair, 0.005);
  CHECK(p.err_u == 0.0);
  CHECK(p.err_w == 0.0);
}

TEST_CASE("diagonal instance evaluates to 4/9 and 1/9") {
  Mat Sw = Mat::Zero(2, 2), Su = Mat::Zero(2, 2);
  Sw(0, 0) = 2;
  Sw(1, 1) = 1;
  Su(0, 0) = 1;
  Su(1, 1) = 2;
  Vec w0 = Vec::Zero(2), u0 = Vec::Zero(2);
  u0[0] = 1.0;  // delta = (1, 0)
  const ObjectivePair pair = ObjectivePair::from_targets(w0, u0);
  const PlateauPrediction p =
      plateau_prediction(SymMatrix(Sw), SymMatrix(Su), pair, 0.005);
  CHECK(p.err_u * p.err_u == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
  CHECK(p.err_w * p.err_w == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("residual identity: resid_w - resid_u = delta") {
  for (int k = 0; k < 25; ++k) {
    const ObjectivePair pair = pair_with_angle(9, 1.2, 1.0, 1.4, 50 + k);
    const PlateauPrediction p =
        plateau_prediction(random_spd(9, 100 + k), random_spd(9, 200 + k), pair, 0.005);
    CHECK((p.resid_w - p.resid_u - pair.delta).norm() <= 1e-10);
    CHECK(p.err_u == doctest::Approx(p.resid_u.norm()).epsilon(1e-12));
    CHECK(p.err_w == doctest::Approx(p.resid_w.norm()).epsilon(1e-12));
  }
}

TEST_CASE("singular combined geometry is rejected") {
  const SymMatrix Z = SymMatrix::zero(3);
  Rng rng(5);
  const ObjectivePair pair =
      ObjectivePair::from_targets(rng.normal_vector(3), rng.normal_vector(3));
  CHECK_THROWS_AS(plateau_prediction(Z, Z, pair, 0.005), BlindDirectionError);
}

TEST_CASE("commuting_plateaus closed forms") {
  Vec lw(3), lu(3), dt(3);
  lw << 1, 2, 3;
  lu << 1, 2, 3;
  dt << 0.5, -1.0, 2.0;
  const CommutingPlateaus equal = commuting_plateaus(lw, lu, dt);
  CHECK(equal.err_u_sq == doctest::Approx(dt.squaredNorm() / 4).epsilon(1e-12));
  CHECK(equal.err_w_sq == doctest::Approx(dt.squaredNorm() / 4).epsilon(1e-12));

  Vec lw2(2), lu2(2), dt2(2);
  lw2 << 2, 1;
  lu2 << 1, 2;
  dt2 << 1, 0;
  const CommutingPlateaus diag = commuting_plateaus(lw2, lu2, dt2);
  CHECK(diag.err_u_sq == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
  CHECK(diag.err_w_sq == doctest::Approx(1.0 / 9.0).epsilon(1e-12));

  // one dominant mode: U's error absorbs the whole gap component
  Vec lwb(2), lub(2);
  lwb << 1e9, 1;
  lub << 1, 1;
  const CommutingPlateaus dom = commuting_plateaus(lwb, lub, dt2);
  CHECK(dom.err_u_sq == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(dom.err_w_sq <= 1e-12);

  Vec zero2 = Vec::Zero(2);
  CHECK_THROWS_AS(commuting_plateaus(zero2, zero2, dt2), BlindDirectionError);
}

TEST_CASE("commuting route equals the direct route on shared eigenbasis pairs") {
  Rng rng(6);
  for (int k = 0; k < 20; ++k) {
    const Mat G = rng.normal_matrix(6, 6);
    const Eigen::HouseholderQR<Mat> qr(G);
    const Mat Q = qr.householderQ();
    Vec lw(6), lu(6);
    for (int i = 0; i < 6; ++i) {
      lw[i] = 0.3 + rng.uniform();
      lu[i] = 0.3 + rng.uniform();
    }
    const SymMatrix S_w(Mat(Q * lw.asDiagonal() * Q.transpose()));
    const SymMatrix S_u(Mat(Q * lu.asDiagonal() * Q.transpose()));
    const ObjectivePair pair = pair_with_angle(6, 2.2, 1.0, 0.8, 700 + k);
    const PlateauPrediction direct = plateau_prediction(S_w, S_u, pair, 0.005);
    const CommutingPlateaus spectral =
        commuting_plateaus(lw, lu, Q.transpose() * pair.delta);
    CHECK(std::abs(direct.err_u * direct.err_u - spectral.err_u_sq) <= 1e-10);
    CHECK(std::abs(direct.err_w * direct.err_w - spectral.err_w_sq) <= 1e-10);
  }
}

TEST_CASE("angle_bounds identity case and envelope edges") {
  const AngleBounds b =
      angle_bounds(SymMatrix::identity(4), SymMatrix::identity(4), kPi / 2);
  CHECK(b.lower_u == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(b.upper_u == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(b.lower_w == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(b.upper_w == doctest::Approx(0.5).epsilon(1e-12));

  const AngleBounds zero =
      angle_bounds(random_spd(4, 11), random_spd(4, 12), 0.0);
  CHECK(zero.lower_u == 0.0);  // r_min(0) = 0
  CHECK(zero.lower_w == 0.0);

  const AngleBounds pi_case = angle_bounds(random_spd(4, 13), random_spd(4, 14), kPi);
  CHECK(pi_case.upper_u == doctest::Approx(pi_case.beta_u * std::sqrt(2.0)));

  CHECK_THROWS_AS(angle_bounds(SymMatrix::identity(3), SymMatrix::identity(3), -0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS(angle_bounds(SymMatrix::identity(3), SymMatrix::identity(3), 3.5),
                  std::invalid_argument);
}

TEST_CASE("envelopes are nondecreasing on a 181-point grid") {
  double prev_min = -1.0, prev_max = -1.0;
  for (int i = 0; i <= 180; ++i) {
    const double theta = kPi * double(i) / 180.0;
    CHECK(r_min_envelope(theta) >= prev_min - 1e-15);
    CHECK(r_max_envelope(theta) >= prev_max - 1e-15);
    prev_min = r_min_envelope(theta);
    prev_max = r_max_envelope(theta);
  }
}

TEST_CASE("simulated plateau sits inside the angle envelope at pi") {
  const double eta = 0.005;
  for (int k = 0; k < 5; ++k) {
    const SymMatrix S_w = random_spd(8, 900 + k);
    const SymMatrix S_u = random_spd(8, 950 + k);
    const ObjectivePair pair = pair_with_angle(8, kPi, 1.0, 1.0, 980 + k);
    const AgentSpec w(S_w, pair.w_star, eta);
    const AgentSpec u(S_u, pair.u_star, eta);
    const Trajectory t = run_alternating(w, u, 400000, 1e-12);
    REQUIRE(t.converged);
    const AngleBounds b = angle_bounds(S_w, S_u, kPi);
    const double denom =
        std::sqrt(pair.w_star.squaredNorm() + pair.u_star.squaredNorm());
    const double norm_u_err = t.err_u.back() / denom;
    const double norm_w_err = t.err_w.back() / denom;
    const double slack = 10.0 * eta;  // generous first-order allowance
    CHECK(norm_u_err >= b.lower_u - 1e-6);
    CHECK(norm_u_err <= b.upper_u + slack);
    CHECK(norm_w_err >= b.lower_w - 1e-6);
    CHECK(norm_w_err <= b.upper_w + slack);
  }
}

TEST_CASE("exact-eta residuals match the simulated fixed point") {
  const double eta = 0.02;
  for (int k = 0; k < 10; ++k) {
    const SymMatrix S_w = random_spd(7, 1100 + k);
    const SymMatrix S_u = random_spd(7, 1200 + k);
    const ObjectivePair pair = pair_with_angle(7, 1.9, 1.0, 1.1, 1300 + k);
    const AgentSpec w(S_w, pair.w_star, eta);
    const AgentSpec u(S_u, pair.u_star, eta);
    const FixedPoint fp = solve_fixed_point(w, u);
    const ExactResiduals exact = exact_plateau_residuals(S_w, S_u, pair, eta);
    CHECK((fp.u_inf - pair.u_star - exact.resid_u).norm() <= 1e-9);
    CHECK((fp.w_inf - pair.w_star - exact.resid_w).norm() <= 1e-9);
  }
}

TEST_CASE("first-order truncation: halving eta at least halves the gap") {
  for (int k = 0; k < 10; ++k) {
    const SymMatrix S_w = random_spd(7, 1400 + k);
    const SymMatrix S_u = random_spd(7, 1500 + k);
    const ObjectivePair pair = pair_with_angle(7, 2.4, 1.0, 1.0, 1600 + k);
    const PlateauPrediction leading = plateau_prediction(S_w, S_u, pair, 0.0);
    auto gap = [&](double eta) {
      const ExactResiduals exact = exact_plateau_residuals(S_w, S_u, pair, eta);
      return std::abs(exact.resid_u.norm() - leading.err_u) +
             std::abs(exact.resid_w.norm() - leading.err_w);
    };
    const double g1 = gap(0.005), g2 = gap(0.0025);
    if (g1 > 1e-12) CHECK(g1 / g2 >= 1.8);
  }
}

#include "a2a/geometry.hpp"

#include <cmath>
#include <numbers>

#include "a2a/rng.hpp"

namespace a2a {

SymMatrix::SymMatrix(Mat m, bool require_psd) : psd_checked_(require_psd) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("SymMatrix: matrix must be square and non-empty");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    throw std::invalid_argument("SymMatrix: input is not symmetric (max asymmetry " +
                                std::to_string(asym) + ")");
  m_ = 0.5 * (m + m.transpose());
  if (require_psd) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m_, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo < -1e-10 * std::max(hi, 0.0) || hi < 0.0)
      throw NotPsdError("SymMatrix: psd flag set but smallest eigenvalue is " +
                        std::to_string(lo));
  }
}

SymMatrix SymMatrix::identity(int dim) { return SymMatrix(Mat::Identity(dim, dim), true); }

SymMatrix SymMatrix::zero(int dim) { return SymMatrix(Mat::Zero(dim, dim), true); }

ObjectivePair ObjectivePair::from_targets(Vec w_star, Vec u_star) {
  if (w_star.size() != u_star.size())
    throw std::invalid_argument("ObjectivePair: dimension mismatch");
  ObjectivePair p;
  p.delta = u_star - w_star;
  p.w_star = std::move(w_star);
  p.u_star = std::move(u_star);
  return p;
}

TaskData generate_task(int d, int n, ScaleMode scale_mode, std::uint64_t seed) {
  if (d < 1 || n < 1) throw std::invalid_argument("generate_task: need d >= 1 and n >= 1");
  const double stddev = scale_mode == ScaleMode::Unit ? 1.0 : 1.0 / std::sqrt(double(d));
  Rng rng(seed);
  TaskData task;
  task.X = rng.normal_matrix(d, n, stddev);
  task.target = rng.normal_vector(d, stddev);
  task.y = task.X.transpose() * task.target;
  task.seed = seed;
  return task;
}

SymMatrix sample_covariance(const Mat& X) {
  if (X.rows() < 1 || X.cols() < 1)
    throw std::invalid_argument("sample_covariance: empty data matrix");
  Mat S = (X * X.transpose()) / double(X.cols());
  S = 0.5 * (S + S.transpose()).eval();
  return SymMatrix(std::move(S), true);
}

SymMatrix projector_onto(const Vec& v) {
  const double n2 = v.squaredNorm();
  if (n2 <= 0.0) throw DegenerateInputError("projector_onto: zero vector");
  Mat P = (v * v.transpose()) / n2;
  P = 0.5 * (P + P.transpose()).eval();
  return SymMatrix(std::move(P), true);
}

Mat spd_factor(const SymMatrix& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S.mat());
  Vec lam = es.eigenvalues();
  const double scale = std::max(lam.cwiseAbs().maxCoeff(), 0.0);
  if (lam.minCoeff() < -1e-8 * scale)
    throw NotPsdError("spd_factor: matrix is not PSD (min eigenvalue " +
                      std::to_string(lam.minCoeff()) + ")");
  Vec root = lam.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

double angle_between(const Vec& a, const Vec& b) {
  const double na = a.norm(), nb = b.norm();
  if (na <= 0.0 || nb <= 0.0)
    throw DegenerateInputError("angle_between: zero vector");
  const Vec ua = a / na;
  const double dot = ua.dot(b) / nb;
  const double perp = (b / nb - dot * ua).norm();
  return std::atan2(perp, dot);
}

ObjectivePair pair_with_angle(int d, double theta, double norm_w, double norm_u,
                              std::uint64_t seed) {
  constexpr double pi = std::numbers::pi;
  if (!(theta >= 0.0 && theta <= pi))
    throw std::invalid_argument("pair_with_angle: theta must be in [0, pi]");
  if (!(norm_w > 0.0) || !(norm_u > 0.0))
    throw std::invalid_argument("pair_with_angle: norms must be positive");
  if (d < 1) throw std::invalid_argument("pair_with_angle: d >= 1");

  const bool at_zero = theta <= 1e-15;
  const bool at_pi = pi - theta <= 1e-15;
  if (d == 1 && !at_zero && !at_pi)
    throw InfeasibleAngleError("pair_with_angle: d = 1 only admits theta in {0, pi}");

  Rng rng(seed);
  Vec a = rng.normal_vector(d);
  while (a.norm() == 0.0) a = rng.normal_vector(d);  // measure-zero guard
  a.normalize();

  Vec w_star = norm_w * a;
  Vec u_star;
  if (at_zero) {
    u_star = norm_u * a;
  } else if (at_pi) {
    u_star = -norm_u * a;
  } else {
    Vec b = rng.normal_vector(d);
    b -= a.dot(b) * a;
    while (b.norm() < 1e-12) {  // re-draw if nearly parallel to a
      b = rng.normal_vector(d);
      b -= a.dot(b) * a;
    }
    b.normalize();
    b -= a.dot(b) * a;  // second pass tightens orthogonality to ~1e-16
    b.normalize();
    u_star = norm_u * (std::cos(theta) * a + std::sin(theta) * b);
  }
  return ObjectivePair::from_targets(std::move(w_star), std::move(u_star));
}

}  // namespace a2a

#include "a2a/predictor.hpp"

#include <cmath>
#include <numbers>

namespace a2a {

namespace {

// Eigendecomposition-backed inverse of S with a conditioning gate.
struct InverseOfSum {
  Eigen::SelfAdjointEigenSolver<Mat> es;
  Mat inv;

  InverseOfSum(const SymMatrix& S_w, const SymMatrix& S_u)
      : es(Mat(S_w.mat() + S_u.mat())) {
    const Vec& lam = es.eigenvalues();
    const double hi = lam.cwiseAbs().maxCoeff();
    const double lo = lam.cwiseAbs().minCoeff();
    if (lam.minCoeff() <= 0.0 || (lo > 0.0 && hi / lo > 1e10) || lo == 0.0)
      throw BlindDirectionError(
          "S = S_W + S_U is singular or near-singular: no unique plateau, the "
          "misalignment can hide from both agents");
    inv = es.eigenvectors() * lam.cwiseInverse().asDiagonal() *
          es.eigenvectors().transpose();
  }
};

}  // namespace

PlateauPrediction plateau_prediction(const SymMatrix& S_w, const SymMatrix& S_u,
                                     const ObjectivePair& pair, double eta) {
  if (S_w.dim() != S_u.dim() || S_w.dim() != pair.delta.size())
    throw std::invalid_argument("plateau_prediction: dimension mismatch");
  InverseOfSum S(S_w, S_u);
  PlateauPrediction out;
  out.resid_u = -(S.inv * (S_w.mat() * pair.delta));
  out.resid_w = S.inv * (S_u.mat() * pair.delta);
  out.err_u = out.resid_u.norm();
  out.err_w = out.resid_w.norm();
  out.order_eta_note = eta;
  return out;
}

CommutingPlateaus commuting_plateaus(const Vec& lam_w, const Vec& lam_u,
                                     const Vec& delta_tilde) {
  const auto d = lam_w.size();
  if (lam_u.size() != d || delta_tilde.size() != d)
    throw std::invalid_argument("commuting_plateaus: length mismatch");
  CommutingPlateaus out{0.0, 0.0};
  for (Eigen::Index i = 0; i < d; ++i) {
    const double s = lam_w[i] + lam_u[i];
    if (!(s > 0.0))
      throw BlindDirectionError("commuting_plateaus: mode " + std::to_string(i) +
                                " has zero combined eigenvalue");
    const double fu = lam_w[i] / s;
    const double fw = lam_u[i] / s;
    out.err_u_sq += fu * fu * delta_tilde[i] * delta_tilde[i];
    out.err_w_sq += fw * fw * delta_tilde[i] * delta_tilde[i];
  }
  return out;
}

double r_min_envelope(double theta) {
  return std::min(1.0, std::sqrt(std::max(0.0, 1.0 - std::cos(theta))));
}

double r_max_envelope(double theta) {
  return std::max(1.0, std::sqrt(std::max(0.0, 1.0 - std::cos(theta))));
}

AngleBounds angle_bounds(const SymMatrix& S_w, const SymMatrix& S_u, double theta) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi))
    throw std::invalid_argument("angle_bounds: theta must be in [0, pi]");
  InverseOfSum S(S_w, S_u);

  // C_U = S_W S^-2 S_W = B^T B with B = S^-1 S_W, so singular values of B
  // give the envelope constants directly.
  auto extremes = [&](const Mat& G) {
    Eigen::JacobiSVD<Mat> svd(S.inv * G);
    const Vec& sv = svd.singularValues();
    return std::pair<double, double>{sv(sv.size() - 1), sv(0)};
  };
  const auto [au, bu] = extremes(S_w.mat());
  const auto [aw, bw] = extremes(S_u.mat());

  AngleBounds out;
  out.alpha_u = au;
  out.beta_u = bu;
  out.alpha_w = aw;
  out.beta_w = bw;
  out.theta = theta;
  const double rmin = r_min_envelope(theta);
  const double rmax = r_max_envelope(theta);
  out.lower_u = au * rmin;
  out.upper_u = bu * rmax;
  out.lower_w = aw * rmin;
  out.upper_w = bw * rmax;
  return out;
}

ExactResiduals exact_plateau_residuals(const SymMatrix& S_w, const SymMatrix& S_u,
                                       const ObjectivePair& pair, double eta) {
  const int d = S_w.dim();
  if (S_u.dim() != d || pair.delta.size() != d)
    throw std::invalid_argument("exact_plateau_residuals: dimension mismatch");
  const Mat A = S_w.mat() + S_u.mat() - eta * (S_u.mat() * S_w.mat());
  Eigen::FullPivLU<Mat> lu(A);
  if (!lu.isInvertible())
    throw SingularSystemError("exact_plateau_residuals: S - eta S_U S_W is singular");
  const Mat H = lu.solve(S_u.mat());
  const Mat M_w = Mat::Identity(d, d) - eta * S_w.mat();
  ExactResiduals out;
  out.resid_u = -(pair.delta - H * pair.delta);
  out.resid_w = M_w * (H * pair.delta);
  return out;
}

}  // namespace a2a

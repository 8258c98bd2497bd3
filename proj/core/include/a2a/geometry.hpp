#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "a2a/errors.hpp"

namespace a2a {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense symmetric d x d matrix (a covariance or an attack geometry).
/// Construction checks symmetry to 1e-12 relative and then symmetrizes
/// exactly; with `require_psd` it additionally checks the spectrum.
class SymMatrix {
 public:
  explicit SymMatrix(Mat m, bool require_psd = false);

  static SymMatrix identity(int dim);
  static SymMatrix zero(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& mat() const { return m_; }
  bool psd_checked() const { return psd_checked_; }

 private:
  Mat m_;
  bool psd_checked_;
};

/// One in-context regression task. Examples are stored as COLUMNS of X
/// (d x n), so the induced geometry is X * X^T / n. Labels are noiseless:
/// y = X^T * target exactly as generated.
struct TaskData {
  Mat X;        // d x n
  Vec y;        // n
  Vec target;   // d, the latent regression weight
  std::uint64_t seed = 0;
};

/// The two agents' objectives and their gap.
struct ObjectivePair {
  Vec w_star;
  Vec u_star;
  Vec delta;  // u_star - w_star, componentwise exact

  static ObjectivePair from_targets(Vec w_star, Vec u_star);
};

enum class ScaleMode { Unit, InvDim };  // entry variance 1 vs 1/d

TaskData generate_task(int d, int n, ScaleMode scale_mode, std::uint64_t seed);

/// S = X * X^T / n (examples are columns).
SymMatrix sample_covariance(const Mat& X);

/// Orthogonal projector onto span{v}: P = v v^T / |v|^2.
SymMatrix projector_onto(const Vec& v);

/// Factor a PSD S as L L^T via eigendecomposition (L = Q sqrt(Lambda)), so
/// rank-deficient inputs (projectors) factor cleanly. Throws NotPsdError if
/// the smallest eigenvalue is below -1e-8 * |S|.
Mat spd_factor(const SymMatrix& S);

/// Objectives with prescribed norms and angle, direction uniform given seed.
/// d = 1 only admits theta in {0, pi}.
ObjectivePair pair_with_angle(int d, double theta, double norm_w, double norm_u,
                              std::uint64_t seed);

/// Angle between two nonzero vectors, computed via atan2 so it stays
/// accurate near 0 and pi.
double angle_between(const Vec& a, const Vec& b);

}  // namespace a2a

#pragma once

#include "a2a/geometry.hpp"

namespace a2a {

/// Leading-order (eta -> 0) limiting errors. The residual vectors are the
/// primals: err_u = |resid_u|, err_w = |resid_w| by construction.
struct PlateauPrediction {
  double err_u;
  double err_w;
  Vec resid_u;           // -S^{-1} S_W delta
  Vec resid_w;           //  S^{-1} S_U delta
  double order_eta_note; // eta supplied by the caller; predictions drop O(eta)
};

struct CommutingPlateaus {
  double err_u_sq;
  double err_w_sq;
};

struct AngleBounds {
  double lower_u, upper_u;
  double lower_w, upper_w;
  double alpha_u, beta_u;  // sqrt of extreme eigenvalues of S_W S^-2 S_W
  double alpha_w, beta_w;  // ... of S_U S^-2 S_U
  double theta;
};

/// Simulation-free prediction of both agents' limiting errors from the
/// geometries and the objective gap. Throws BlindDirectionError when
/// S = S_W + S_U is singular (condition number above 1e10): the gap could
/// hide in a direction neither agent sees.
PlateauPrediction plateau_prediction(const SymMatrix& S_w, const SymMatrix& S_u,
                                     const ObjectivePair& pair, double eta);

/// Commuting-geometry special case, directly from the joint spectra and the
/// gap coordinates in the shared eigenbasis.
CommutingPlateaus commuting_plateaus(const Vec& lam_w, const Vec& lam_u,
                                     const Vec& delta_tilde);

/// Envelopes for the plateau normalized by sqrt(|w*|^2 + |u*|^2) as a
/// function of the objective angle.
AngleBounds angle_bounds(const SymMatrix& S_w, const SymMatrix& S_u, double theta);

double r_min_envelope(double theta);  // min(1, sqrt(1 - cos theta))
double r_max_envelope(double theta);  // max(1, sqrt(1 - cos theta))

struct ExactResiduals {
  Vec resid_u;  // -(I - H) delta, H = (S - eta S_U S_W)^{-1} S_U
  Vec resid_w;  // M_W H delta
};

/// Exact-eta fixed-point residuals (diagnostic). Separates the O(eta)
/// truncation of plateau_prediction from simulation error in tests.
ExactResiduals exact_plateau_residuals(const SymMatrix& S_w, const SymMatrix& S_u,
                                       const ObjectivePair& pair, double eta);

}  // namespace a2a

#pragma once

#include "a2a/dynamics.hpp"
#include "a2a/geometry.hpp"

namespace a2a {

/// Kernel-membership thresholds. The asymmetric-convergence conditions are
/// exact-arithmetic statements; these make them checkable in floating point.
struct KernelTolerance {
  double abs = 1e-9;
  double rel = 1e-8;
};

/// Both sides of the asymmetric-convergence criterion:
///   cancel_norm = |(I - eta S_U) S_W delta|   (must vanish)
///   escape_norm = |(eta S_W - I) delta|        (must not vanish)
struct AsymmetryDiagnosis {
  double cancel_norm;
  double escape_norm;
  bool holds;
};

/// A constructed adversarial geometry: eigenvalue spike 1/eta on
/// span{v = S_W delta}, epsilon elsewhere, together with the exact data
/// realization X_u (X_u X_u^T / n = S_u).
struct AttackDesign {
  SymMatrix S_u;
  Mat X_u;  // d x n
  Vec v;
  double epsilon;
  double eta;
  double tau;
  AsymmetryDiagnosis diagnosis;
};

AsymmetryDiagnosis check_asymmetric(const SymMatrix& S_w, const SymMatrix& S_u,
                                    const ObjectivePair& pair, double eta,
                                    const KernelTolerance& tol = {});

/// White-box construction: S_u = (1/eta) P_v + epsilon (I - P_v) with
/// epsilon = (1 - tau)/eta, realized as X_u = sqrt(n) L (zero-padded when
/// n > d). Requires n >= d so the full-rank geometry is realizable.
AttackDesign design_attack(const SymMatrix& S_w, const ObjectivePair& pair, double eta,
                           double tau, int n, const KernelTolerance& tol = {});

struct AttackOutcome {
  bool success;
  double final_err_w;
  double final_err_u;
};

/// Threshold test at the final recorded turn: victim stuck above eps_victim,
/// attacker within eps_attacker of its own target.
AttackOutcome evaluate_attack(const Trajectory& traj, const ObjectivePair& pair,
                              double eps_victim, double eps_attacker);

double default_eps_victim(const ObjectivePair& pair);    // 0.1 |delta|
double default_eps_attacker(const ObjectivePair& pair);  // 1e-3 max(1, |u*|)

/// Closed-form victim residual under a valid design: |(eta S_W - I) delta|.
double victim_residual_norm(const SymMatrix& S_w, const ObjectivePair& pair, double eta);

/// AttackDesign <-> JSON (matrices as row-major nested arrays).
std::string attack_design_to_json(const AttackDesign& design);
AttackDesign attack_design_from_json(const std::string& text);
void save_attack_design(const AttackDesign& design, const std::string& path);
AttackDesign load_attack_design(const std::string& path);

}  // namespace a2a

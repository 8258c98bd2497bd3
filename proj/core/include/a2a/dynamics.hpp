#pragma once

#include <vector>

#include "a2a/geometry.hpp"

namespace a2a {

/// One agent of the coupled update system: geometry S, target, step size.
struct AgentSpec {
  SymMatrix geometry;
  Vec target;
  double eta;

  AgentSpec(SymMatrix S, Vec target_vec, double eta_step);
};

/// Shared-iterate record of one alternating run. iterates[0] is the zero
/// initialization; every half-turn appends one state. err_w samples
/// |state - w*| after W's turns, err_u samples |state - u*| after U's.
struct Trajectory {
  std::vector<Vec> iterates;
  std::vector<double> err_w;
  std::vector<double> err_u;
  bool converged = false;
  int turns_run = 0;  // full W+U rounds
};

struct FixedPoint {
  Vec w_inf;
  Vec u_inf;
  double spectral_norm_product;  // |M_U M_W|_2
  double rcond;                  // reciprocal condition of I - M_U M_W
  bool stable_eta;               // stability_check verdict for the inputs
  double resid_w;                // |w_inf - (M_W u_inf + eta S_W w*)|
  double resid_u;
};

struct StabilityResult {
  bool stable;
  double eta_max;  // min(2/lmax(S_W), 2/lmax(S_U)); +inf if both spectra vanish
};

/// One half-turn: state - eta * S * (state - target).
Vec step_agent(const Vec& state, const AgentSpec& spec);

struct RunOptions {
  int max_turns = 10000;
  double stop_tol = 1e-10;     // on successive full-turn state displacement
  double divergence_cap = 1e12;
  Vec initial;                 // empty => zero vector
};

/// Alternates W then U from the zero state until the full-turn displacement
/// drops below stop_tol or max_turns is hit. Throws DivergenceError (with
/// the offending turn) on non-finite or exploding states.
Trajectory run_alternating(const AgentSpec& spec_w, const AgentSpec& spec_u,
                           int max_turns = 10000, double stop_tol = 1e-10);
Trajectory run_alternating(const AgentSpec& spec_w, const AgentSpec& spec_u,
                           const RunOptions& opts);

StabilityResult stability_check(double eta, const SymMatrix& S_w, const SymMatrix& S_u);

/// Direct dense solve of the stationary system
///   (I - M_U M_W) u_inf = eta (M_U S_W w* + S_U u*),  w_inf = M_W u_inf + eta S_W w*,
/// with M_X = I - eta S_X. No iteration. Throws SingularSystemError when
/// I - M_U M_W is conditioned worse than 1e-12.
FixedPoint solve_fixed_point(const AgentSpec& spec_w, const AgentSpec& spec_u);

/// Mean of the last `window` fraction of a curve (the plateau estimator used
/// by the experiment protocols).
double plateau_mean(const std::vector<double>& curve, double window = 0.1);

}  // namespace a2a

#include "a2a/dynamics.hpp"

#include <cmath>
#include <limits>

namespace a2a {

AgentSpec::AgentSpec(SymMatrix S, Vec target_vec, double eta_step)
    : geometry(std::move(S)), target(std::move(target_vec)), eta(eta_step) {
  if (geometry.dim() != target.size())
    throw std::invalid_argument("AgentSpec: geometry dim != target length");
  if (!(eta > 0.0)) throw std::invalid_argument("AgentSpec: eta must be positive");
}

Vec step_agent(const Vec& state, const AgentSpec& spec) {
  if (state.size() != spec.geometry.dim())
    throw std::invalid_argument("step_agent: state dimension mismatch");
  return state - spec.eta * (spec.geometry.mat() * (state - spec.target));
}

namespace {

void check_finite(const Vec& state, double cap, int turn) {
  if (!state.allFinite() || state.norm() > cap)
    throw DivergenceError("alternating dynamics diverged at turn " + std::to_string(turn),
                          turn);
}

}  // namespace

Trajectory run_alternating(const AgentSpec& spec_w, const AgentSpec& spec_u,
                           int max_turns, double stop_tol) {
  RunOptions opts;
  opts.max_turns = max_turns;
  opts.stop_tol = stop_tol;
  return run_alternating(spec_w, spec_u, opts);
}

Trajectory run_alternating(const AgentSpec& spec_w, const AgentSpec& spec_u,
                           const RunOptions& opts) {
  const int d = spec_w.geometry.dim();
  if (spec_u.geometry.dim() != d)
    throw std::invalid_argument("run_alternating: agents disagree on dimension");
  if (spec_w.eta != spec_u.eta)
    throw std::invalid_argument("run_alternating: agents must share eta");

  Vec state = opts.initial.size() ? opts.initial : Vec::Zero(d);
  if (state.size() != d)
    throw std::invalid_argument("run_alternating: initial state dimension mismatch");

  Trajectory traj;
  traj.iterates.reserve(2 * std::min(opts.max_turns, 1 << 16) + 1);
  traj.iterates.push_back(state);

  Vec prev_full = state;
  for (int turn = 0; turn < opts.max_turns; ++turn) {
    state = step_agent(state, spec_w);
    check_finite(state, opts.divergence_cap, turn);
    traj.iterates.push_back(state);
    traj.err_w.push_back((state - spec_w.target).norm());

    state = step_agent(state, spec_u);
    check_finite(state, opts.divergence_cap, turn);
    traj.iterates.push_back(state);
    traj.err_u.push_back((state - spec_u.target).norm());

    ++traj.turns_run;
    if ((state - prev_full).norm() <= opts.stop_tol) {
      traj.converged = true;
      break;
    }
    prev_full = state;
  }
  return traj;
}

StabilityResult stability_check(double eta, const SymMatrix& S_w, const SymMatrix& S_u) {
  auto lmax = [](const SymMatrix& S) {
    Eigen::SelfAdjointEigenSolver<Mat> es(S.mat(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  };
  const double lw = lmax(S_w);
  const double lu = lmax(S_u);
  double eta_max = std::numeric_limits<double>::infinity();
  if (lw > 0.0) eta_max = std::min(eta_max, 2.0 / lw);
  if (lu > 0.0) eta_max = std::min(eta_max, 2.0 / lu);
  return {eta > 0.0 && eta < eta_max, eta_max};
}

FixedPoint solve_fixed_point(const AgentSpec& spec_w, const AgentSpec& spec_u) {
  const int d = spec_w.geometry.dim();
  if (spec_u.geometry.dim() != d)
    throw std::invalid_argument("solve_fixed_point: agents disagree on dimension");
  if (spec_w.eta != spec_u.eta)
    throw std::invalid_argument("solve_fixed_point: agents must share eta");
  const double eta = spec_w.eta;
  const Mat& S_w = spec_w.geometry.mat();
  const Mat& S_u = spec_u.geometry.mat();
  const Mat I = Mat::Identity(d, d);
  const Mat M_w = I - eta * S_w;
  const Mat M_u = I - eta * S_u;

  const Mat A = I - M_u * M_w;
  Eigen::JacobiSVD<Mat> svd(M_u * M_w);
  const double prod_norm = svd.singularValues()(0);

  Eigen::JacobiSVD<Mat> svd_A(A);
  const double smax = svd_A.singularValues()(0);
  const double smin = svd_A.singularValues()(svd_A.singularValues().size() - 1);
  const double rcond = smax > 0.0 ? smin / smax : 0.0;
  if (rcond < 1e-12)
    throw SingularSystemError("solve_fixed_point: I - M_U M_W is singular (rcond " +
                              std::to_string(rcond) + ")");

  const Vec b = eta * (M_u * (S_w * spec_w.target) + S_u * spec_u.target);
  FixedPoint fp;
  fp.u_inf = A.partialPivLu().solve(b);
  fp.w_inf = M_w * fp.u_inf + eta * (S_w * spec_w.target);
  fp.spectral_norm_product = prod_norm;
  fp.rcond = rcond;
  fp.stable_eta = stability_check(eta, spec_w.geometry, spec_u.geometry).stable;
  fp.resid_w = (fp.w_inf - (M_w * fp.u_inf + eta * (S_w * spec_w.target))).norm();
  fp.resid_u = (fp.u_inf - (M_u * fp.w_inf + eta * (S_u * spec_u.target))).norm();
  return fp;
}

double plateau_mean(const std::vector<double>& curve, double window) {
  if (curve.empty()) throw std::invalid_argument("plateau_mean: empty curve");
  if (!(window > 0.0 && window <= 1.0))
    throw std::invalid_argument("plateau_mean: window must be in (0, 1]");
  const auto n = curve.size();
  auto k = static_cast<std::size_t>(std::ceil(window * double(n)));
  if (k < 1) k = 1;
  double acc = 0.0;
  for (std::size_t i = n - k; i < n; ++i) acc += curve[i];
  return acc / double(k);
}

}  // namespace a2a

#include "a2a/adversary.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "a2a/io.hpp"

namespace a2a {

using nlohmann::json;

AsymmetryDiagnosis check_asymmetric(const SymMatrix& S_w, const SymMatrix& S_u,
                                    const ObjectivePair& pair, double eta,
                                    const KernelTolerance& tol) {
  const int d = S_w.dim();
  if (S_u.dim() != d || pair.delta.size() != d)
    throw std::invalid_argument("check_asymmetric: dimension mismatch");
  const double delta_norm = pair.delta.norm();
  if (delta_norm == 0.0)
    throw DegenerateInputError("check_asymmetric: delta = 0, criterion is vacuous");

  const Mat I = Mat::Identity(d, d);
  AsymmetryDiagnosis diag;
  diag.cancel_norm = ((I - eta * S_u.mat()) * (S_w.mat() * pair.delta)).norm();
  diag.escape_norm = ((eta * S_w.mat() - I) * pair.delta).norm();
  const double thresh = tol.abs + tol.rel * delta_norm;
  diag.holds = diag.cancel_norm <= thresh && diag.escape_norm > thresh;
  return diag;
}

AttackDesign design_attack(const SymMatrix& S_w, const ObjectivePair& pair, double eta,
                           double tau, int n, const KernelTolerance& tol) {
  const int d = S_w.dim();
  if (pair.delta.size() != d)
    throw std::invalid_argument("design_attack: dimension mismatch");
  if (!(eta > 0.0)) throw std::invalid_argument("design_attack: eta must be positive");
  if (!(tau > 0.0 && tau < 0.5))
    throw std::invalid_argument("design_attack: stability margin tau must be in (0, 1/2)");
  if (n < d)
    throw std::invalid_argument(
        "design_attack: n >= d required to realize a full-rank geometry exactly");
  const double delta_norm = pair.delta.norm();
  if (delta_norm == 0.0)
    throw DegenerateInputError("design_attack: delta = 0, nothing to attack");

  Vec v = S_w.mat() * pair.delta;
  if (v.norm() == 0.0)
    throw BlindAttackError(
        "design_attack: S_W annihilates delta; asymmetry already holds but the spike "
        "direction is undefined");

  // (1/eta, delta) must not be an eigenpair of S_W, else W fixes its own
  // residual in one step and the asymmetry collapses.
  if ((v - pair.delta / eta).norm() <= tol.rel * delta_norm / eta)
    throw InfeasibleAttackError(
        "design_attack: delta is an eigenvector of S_W with eigenvalue 1/eta; pick a "
        "different eta");

  const double epsilon = (1.0 - tau) / eta;
  const Mat P = projector_onto(v).mat();
  const Mat I = Mat::Identity(d, d);
  Mat S = (1.0 / eta) * P + epsilon * (I - P);
  S = 0.5 * (S + S.transpose()).eval();

  AttackDesign design{SymMatrix(std::move(S), true), Mat::Zero(d, n), std::move(v),
                      epsilon,  eta,                 tau,
                      {}};
  const Mat L = spd_factor(design.S_u);
  design.X_u.leftCols(d) = std::sqrt(double(n)) * L;
  design.diagnosis = check_asymmetric(S_w, design.S_u, pair, eta, tol);
  return design;
}

AttackOutcome evaluate_attack(const Trajectory& traj, const ObjectivePair& pair,
                              double eps_victim, double eps_attacker) {
  if (traj.err_w.empty() || traj.err_u.empty())
    throw std::invalid_argument("evaluate_attack: empty trajectory");
  (void)pair;
  AttackOutcome out;
  out.final_err_w = traj.err_w.back();
  out.final_err_u = traj.err_u.back();
  out.success = out.final_err_w > eps_victim && out.final_err_u < eps_attacker;
  return out;
}

double default_eps_victim(const ObjectivePair& pair) { return 0.1 * pair.delta.norm(); }

double default_eps_attacker(const ObjectivePair& pair) {
  return 1e-3 * std::max(1.0, pair.u_star.norm());
}

double victim_residual_norm(const SymMatrix& S_w, const ObjectivePair& pair, double eta) {
  const Mat I = Mat::Identity(S_w.dim(), S_w.dim());
  return ((eta * S_w.mat() - I) * pair.delta).norm();
}

std::string attack_design_to_json(const AttackDesign& design) {
  json j;
  j["d"] = design.S_u.dim();
  j["n"] = design.X_u.cols();
  j["eta"] = design.eta;
  j["tau"] = design.tau;
  j["epsilon"] = design.epsilon;
  j["S_u"] = matrix_to_rows(design.S_u.mat());
  j["X_u"] = matrix_to_rows(design.X_u);
  j["v"] = std::vector<double>(design.v.data(), design.v.data() + design.v.size());
  j["diagnosis"] = {{"cancel_norm", design.diagnosis.cancel_norm},
                    {"escape_norm", design.diagnosis.escape_norm},
                    {"holds", design.diagnosis.holds}};
  return j.dump(2);
}

AttackDesign attack_design_from_json(const std::string& text) {
  json j = json::parse(text);
  const int d = j.at("d").get<int>();
  const int n = j.at("n").get<int>();
  Mat S = rows_to_matrix(j.at("S_u").get<std::vector<std::vector<double>>>());
  Mat X = rows_to_matrix(j.at("X_u").get<std::vector<std::vector<double>>>());
  if (S.rows() != d || S.cols() != d || X.rows() != d || X.cols() != n)
    throw ConfigError("attack design: matrix shapes disagree with d, n");
  auto v_vals = j.at("v").get<std::vector<double>>();
  AttackDesign design{SymMatrix(std::move(S), true),
                      std::move(X),
                      Eigen::Map<Vec>(v_vals.data(), static_cast<Eigen::Index>(v_vals.size())),
                      j.at("epsilon").get<double>(),
                      j.at("eta").get<double>(),
                      j.at("tau").get<double>(),
                      {}};
  const auto& diag = j.at("diagnosis");
  design.diagnosis.cancel_norm = diag.at("cancel_norm").get<double>();
  design.diagnosis.escape_norm = diag.at("escape_norm").get<double>();
  design.diagnosis.holds = diag.at("holds").get<bool>();
  return design;
}

void save_attack_design(const AttackDesign& design, const std::string& path) {
  atomic_write_text(path, attack_design_to_json(design));
}

AttackDesign load_attack_design(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open attack design file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return attack_design_from_json(text);
}

}  // namespace a2a

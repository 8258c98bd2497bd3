// a2a: agent-to-agent in-context optimization lab.
//
// Subcommands: simulate, predict, attack, sweep-angle, train-lsa, validate.
// Experiments read a JSON config (see docs in README), flags win over config
// fields, and every run echoes its resolved config into the output directory.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "a2a/harness.hpp"
#include "a2a/io.hpp"
#include "a2a/lsa.hpp"
#include "a2a/rng.hpp"
#include "a2a/validate.hpp"

namespace {

using nlohmann::json;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> eta;
  std::optional<std::string> loss_mode;
  std::optional<int> turns;
  std::optional<int> workers;
  std::optional<double> theta;
  std::optional<std::string> gap;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool experiment) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--seed", flags.seed, "Run a single seed (replaces the config seed list)");
  cmd->add_option("--out", flags.out, "Output directory");
  cmd->add_option("--eta", flags.eta, "Step size override");
  cmd->add_option("--loss-mode", flags.loss_mode, "Gradient convention: mean | sum")
      ->check(CLI::IsMember({"mean", "sum"}));
  if (experiment) {
    cmd->add_option("--turns", flags.turns, "Interaction turn budget");
    cmd->add_option("--workers", flags.workers, "Parallel workers (0 = auto)");
    cmd->add_option("--theta", flags.theta, "Objective angle (simulate/predict)");
    cmd->add_option("--gap", flags.gap, "Attack gap: orthogonal | scaled | opposite")
        ->check(CLI::IsMember({"orthogonal", "scaled", "opposite"}));
  }
}

a2a::ExperimentConfig resolve_config(const CommonFlags& flags, a2a::ExperimentKind kind) {
  a2a::ExperimentConfig config;
  if (!flags.config_path.empty())
    config = a2a::experiment_config_from_json(a2a::read_text_file(flags.config_path));
  config.kind = kind;  // the subcommand owns the experiment kind
  if (flags.seed) config.seeds = {*flags.seed};
  if (flags.out) config.out_dir = *flags.out;
  if (flags.eta) config.eta = *flags.eta;
  if (flags.loss_mode) config.loss_mode = a2a::loss_mode_from_string(*flags.loss_mode);
  if (flags.turns) config.turns = *flags.turns;
  if (flags.workers) config.workers = *flags.workers;
  if (flags.theta) config.theta = *flags.theta;
  if (flags.gap) config.gap_type = a2a::gap_type_from_string(*flags.gap);
  if (!(config.eta > 0)) throw a2a::ConfigError("eta must be > 0");
  return config;
}

int run_experiment_command(const CommonFlags& flags, a2a::ExperimentKind kind) {
  const a2a::ExperimentConfig config = resolve_config(flags, kind);
  const a2a::ExperimentReport report = a2a::run_experiment(config);
  a2a::write_experiment_outputs(report);
  std::cout << "wrote " << config.out_dir << "/report.json (config " << report.config_hash
            << ", " << report.runtime_seconds << " s)\n";
  if (kind == a2a::ExperimentKind::Attack)
    std::cout << "success rate " << report.success_rate << " (" << report.successes
              << " successes, " << report.failed_constructions
              << " failed constructions)\n";
  return 0;
}

int run_predict(const CommonFlags& flags) {
  const a2a::ExperimentConfig config = resolve_config(flags, a2a::ExperimentKind::Converge);
  json out;
  out["config"] = json::parse(a2a::experiment_config_to_json(config));
  out["config_hash"] = a2a::experiment_config_hash(config);
  json rows = json::array();
  for (const std::uint64_t seed : config.seeds) {
    const a2a::TaskData task_w =
        a2a::generate_task(config.d, config.n, config.scale_mode, a2a::mix_seed(seed, 1));
    const a2a::TaskData task_u =
        a2a::generate_task(config.d, config.n, config.scale_mode, a2a::mix_seed(seed, 2));
    const a2a::ObjectivePair pair = a2a::pair_with_angle(
        config.d, config.theta, config.norm_w, config.norm_u, a2a::mix_seed(seed, 3));
    const a2a::SymMatrix S_w = a2a::effective_geometry(task_w.X, config.loss_mode);
    const a2a::SymMatrix S_u = a2a::effective_geometry(task_u.X, config.loss_mode);
    const a2a::PlateauPrediction pred =
        a2a::plateau_prediction(S_w, S_u, pair, config.eta);
    const a2a::AngleBounds bounds = a2a::angle_bounds(S_w, S_u, config.theta);
    const a2a::ExactResiduals exact =
        a2a::exact_plateau_residuals(S_w, S_u, pair, config.eta);
    const a2a::StabilityResult stab = a2a::stability_check(config.eta, S_w, S_u);
    json row;
    row["seed"] = seed;
    row["config_hash"] = a2a::experiment_config_hash(config);
    row["theta"] = config.theta;
    row["predicted_err_w"] = pred.err_w;
    row["predicted_err_u"] = pred.err_u;
    row["exact_eta_err_w"] = exact.resid_w.norm();
    row["exact_eta_err_u"] = exact.resid_u.norm();
    row["lower_w"] = bounds.lower_w;
    row["upper_w"] = bounds.upper_w;
    row["lower_u"] = bounds.lower_u;
    row["upper_u"] = bounds.upper_u;
    row["stable"] = stab.stable;
    row["eta_max"] = stab.eta_max;
    rows.push_back(row);
  }
  out["rows"] = rows;
  std::filesystem::create_directories(config.out_dir);
  a2a::atomic_write_text(config.out_dir + "/predictions.json", out.dump(2));
  a2a::atomic_write_text(config.out_dir + "/config.json",
                         a2a::experiment_config_to_json(config));
  std::cout << "wrote " << config.out_dir << "/predictions.json\n";
  return 0;
}

int run_train(const CommonFlags& flags) {
  a2a::TrainConfig config;
  if (!flags.config_path.empty())
    config = a2a::train_config_from_json(a2a::read_text_file(flags.config_path));
  if (flags.seed) config.seed = *flags.seed;
  if (flags.eta) config.gd_eta = *flags.eta;
  if (flags.loss_mode) config.loss_mode = a2a::loss_mode_from_string(*flags.loss_mode);
  const std::string out_dir = flags.out.value_or("out");

  const a2a::LsaParams params = a2a::train_lsa(config);
  std::filesystem::create_directories(out_dir);
  a2a::save_lsa_checkpoint(params, out_dir + "/checkpoint.json");
  a2a::atomic_write_text(out_dir + "/train_config.json", a2a::train_config_to_json(config));

  const a2a::LsaEvalStats eval =
      a2a::evaluate_lsa_gradient_error(params, config, 10, a2a::mix_seed(config.seed, 77));
  json summary = {
      {"final_loss", params.train_meta.final_loss},
      {"epochs_run", params.train_meta.epochs_run},
      {"held_out_median_rel_err", eval.median_rel_err},
      {"held_out_mean_rel_err", eval.mean_rel_err},
      {"held_out_pairs", eval.pair_count},
  };
  a2a::atomic_write_text(out_dir + "/train_report.json", summary.dump(2));
  std::cout << "final loss " << params.train_meta.final_loss
            << ", held-out median rel err " << eval.median_rel_err << "\n"
            << "wrote " << out_dir << "/checkpoint.json\n";
  return 0;
}

int run_validate(bool full) {
  const auto results = a2a::run_validation_suite(!full);
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  bool all_ok = true;
  for (const auto& r : results) {
    std::printf("%-*s  %s%s%s\n", int(width), r.name.c_str(),
                r.passed ? "PASS" : "FAIL", r.detail.empty() ? "" : "  ",
                r.detail.c_str());
    all_ok &= r.passed;
  }
  std::printf("%zu/%zu checks passed\n",
              std::size_t(std::count_if(results.begin(), results.end(),
                                        [](const auto& r) { return r.passed; })),
              results.size());
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agent-to-agent in-context optimization lab"};
  app.require_subcommand(1);

  CommonFlags simulate_flags, sweep_flags, attack_flags, predict_flags, train_flags;
  bool validate_full = false;

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run one alternating interaction per seed, write trajectories");
  add_common(simulate, simulate_flags, true);

  CLI::App* predict = app.add_subcommand(
      "predict", "Closed-form plateau predictions and angle bounds, no simulation");
  add_common(predict, predict_flags, true);

  CLI::App* attack = app.add_subcommand(
      "attack", "White-box attack experiment over seeds and a gap setting");
  add_common(attack, attack_flags, true);

  CLI::App* sweep = app.add_subcommand(
      "sweep-angle", "Plateau-vs-angle protocol over a theta grid");
  add_common(sweep, sweep_flags, true);

  CLI::App* train = app.add_subcommand("train-lsa", "Train the LSA gradient predictor");
  add_common(train, train_flags, false);

  CLI::App* validate = app.add_subcommand("validate", "Run the invariant suites");
  validate->add_flag("--full", validate_full, "Full trial counts (slower)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the usage error
    return int(a2a::ExitCode::ConfigError);
  }

  try {
    if (simulate->parsed())
      return run_experiment_command(simulate_flags, a2a::ExperimentKind::Converge);
    if (predict->parsed()) return run_predict(predict_flags);
    if (attack->parsed())
      return run_experiment_command(attack_flags, a2a::ExperimentKind::Attack);
    if (sweep->parsed())
      return run_experiment_command(sweep_flags, a2a::ExperimentKind::AngleSweep);
    if (train->parsed()) return run_train(train_flags);
    if (validate->parsed()) return run_validate(validate_full);
  } catch (const a2a::ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return int(a2a::ExitCode::ConfigError);
  } catch (const a2a::DivergenceError& ex) {
    std::cerr << "divergence: " << ex.what() << "\n";
    return int(a2a::ExitCode::Divergence);
  } catch (const a2a::BackendError& ex) {
    std::cerr << "backend failure: " << ex.what() << "\n";
    return int(a2a::ExitCode::BackendFailure);
  } catch (const a2a::TransportError& ex) {
    std::cerr << "backend transport failure: " << ex.what() << "\n";
    return int(a2a::ExitCode::BackendFailure);
  } catch (const a2a::HttpStatusError& ex) {
    std::cerr << "backend HTTP failure: " << ex.what() << "\n";
    return int(a2a::ExitCode::BackendFailure);
  } catch (const a2a::ParseFailureError& ex) {
    std::cerr << "backend parse failure: " << ex.what() << "\n";
    return int(a2a::ExitCode::BackendFailure);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}

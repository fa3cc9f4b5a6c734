// fmsr: train, evaluate, compare and inspect failure modes of the
// multi-agent hand policies.
//
//   fmsr train --config <path> --seed <n>
//   fmsr evaluate --checkpoint <path> --trials <n>
//   fmsr ablate --configs <paths...>
//   fmsr failures --a <ckpt> --b <ckpt> --trials <n>
//
// Results go to the config's output_dir unless FMSR_OUTPUT_DIR is set.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "fmsr/config.hpp"
#include "fmsr/error.hpp"
#include "fmsr/evaluation.hpp"
#include "fmsr/trainer.hpp"

namespace fs = std::filesystem;
using namespace fmsr;

namespace {

std::string checkpoint_label(const Checkpoint& c) { return c.config.name + "_seed" + std::to_string(c.seed); }

EvaluationResult evaluate_checkpoint(const Checkpoint& c, int trials, double threshold, std::uint64_t set_seed) {
  const ActorPolicy policy(c.learner);
  return evaluate_policy(c.env, policy, trials, threshold, set_seed, c.config.rollout_workers);
}

int cmd_train(const std::string& config_path, std::uint64_t seed) {
  const RunConfig config = load_config(config_path);
  const auto paths = train_run(config, seed, resolve_output_dir(config));
  std::cout << "manifest: " << paths.manifest.string() << '\n' << "checkpoint: " << paths.checkpoint.string() << '\n';
  return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, int trials, std::optional<double> threshold) {
  const Checkpoint c = load_checkpoint(checkpoint_path);
  const double th = threshold.value_or(c.config.test_threshold);
  const EvaluationResult r = evaluate_checkpoint(c, trials, th, c.config.test_seed);
  const fs::path dir = resolve_output_dir(c.config) / "evaluations" / checkpoint_label(c);
  fs::create_directories(dir / "stability");
  std::ofstream trials_out(dir / "trials.csv");
  write_trials_csv(trials_out, r);
  for (const auto& tr : r.trials) {
    std::ofstream s(dir / "stability" / ("trial_" + std::to_string(tr.trial) + ".csv"));
    write_stability_csv(s, tr.records, 10, c.env.config().time_step);
  }
  std::ofstream summary(dir / "summary.txt");
  summary << "checkpoint=" << checkpoint_path << "\ntrials=" << trials << "\nthreshold=" << th
          << "\ntest_seed=" << c.config.test_seed << "\nsuccess_rate=" << r.success_rate << '\n';
  std::cout << "success_rate " << r.success_rate << " (" << trials << " trials, threshold " << th << " rad)\n"
            << "results: " << dir.string() << '\n';
  return 0;
}

int cmd_ablate(const std::vector<std::string>& config_paths) {
  std::vector<RunConfig> configs;
  for (const auto& p : config_paths) configs.push_back(load_config(p));
  const fs::path out = resolve_output_dir(configs.front());
  const fs::path dir = out / "ablation";
  fs::create_directories(dir);

  std::ofstream curves(dir / "curves.csv");
  curves << "configuration,seed,epoch,validation_success\n";
  std::ofstream per_seed(dir / "seed_results.csv");
  per_seed << "configuration,seed,final_validation_success,test_success\n";

  std::vector<std::string> names;
  std::vector<EvaluationResult> best_evals;
  std::vector<std::pair<double, double>> seed_stats;
  for (const RunConfig& config : configs) {
    std::optional<EvaluationResult> best;
    double sum = 0.0, top = -1.0;
    for (std::uint64_t seed : config.seeds) {
      const auto paths = train_run(config, seed, out);
      const Checkpoint c = load_checkpoint(paths.checkpoint);
      // Re-read the curve from the trainer's file so this report shows
      // exactly what was written to disk.
      std::ifstream curve(paths.curve);
      std::string line;
      std::getline(curve, line);
      double final_val = 0.0;
      while (std::getline(curve, line)) {
        const auto a = line.find(','), b = line.find(',', a + 1);
        final_val = std::stod(line.substr(a + 1, b - a - 1));
        curves << config.name << ',' << seed << ',' << line.substr(0, a) << ',' << line.substr(a + 1, b - a - 1) << '\n';
      }
      EvaluationResult r = evaluate_checkpoint(c, config.eval_trials_test, config.test_threshold, config.test_seed);
      per_seed << config.name << ',' << seed << ',' << final_val << ',' << r.success_rate << '\n';
      std::cout << config.name << " seed " << seed << ": test success " << r.success_rate << '\n';
      sum += r.success_rate;
      if (r.success_rate > top) {
        top = r.success_rate;
        best = std::move(r);
      }
    }
    names.push_back(config.name);
    best_evals.push_back(std::move(*best));
    seed_stats.emplace_back(sum / static_cast<double>(config.seeds.size()), top);
  }

  AblationReport report = ablation_report(names, best_evals);
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    report.rows[r].seed_mean_success = seed_stats[r].first;
    report.rows[r].seed_best_success = seed_stats[r].second;
  }
  std::ofstream table(dir / "ablation.csv");
  write_ablation_csv(table, report);
  std::ofstream diff(dir / "config_diff.txt");
  for (std::size_t k = 1; k < configs.size(); ++k) {
    diff << configs.front().name << " vs " << configs[k].name << ':';
    for (const auto& key : config_diff(configs.front(), configs[k])) diff << ' ' << key;
    diff << '\n';
  }
  std::cout << "report: " << (dir / "ablation.csv").string() << '\n';
  return 0;
}

int cmd_failures(const std::string& a_path, const std::string& b_path, int trials) {
  const Checkpoint a = load_checkpoint(a_path);
  const Checkpoint b = load_checkpoint(b_path);
  if (a.config.failure_seed != b.config.failure_seed || a.config.test_threshold != b.config.test_threshold)
    throw ConfigError("the two checkpoints declare different failure sets");
  const EvaluationResult ra = evaluate_checkpoint(a, trials, a.config.test_threshold, a.config.failure_seed);
  const EvaluationResult rb = evaluate_checkpoint(b, trials, b.config.test_threshold, b.config.failure_seed);
  const std::string na = checkpoint_label(a), nb = checkpoint_label(b);
  const fs::path dir = resolve_output_dir(a.config) / "failures";
  fs::create_directories(dir);
  std::ofstream table(dir / "failure_report.csv");
  write_failure_csv(table, {failure_row(na, ra), failure_row(nb, rb)});
  std::ofstream labels(dir / "outcome_labels.csv");
  write_outcome_labels(labels, na, ra, true);
  write_outcome_labels(labels, nb, rb, false);
  write_failure_csv(std::cout, {failure_row(na, ra), failure_row(nb, rb)});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finger-specific shadow rewards with information sharing for multi-agent in-hand rotation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  auto* train = app.add_subcommand("train", "train one seed of a configuration");
  train->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "training seed")->required();

  std::string checkpoint;
  int trials = 0;
  std::optional<double> threshold;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on the fixed test set");
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--trials", trials, "number of test trials")->required()->check(CLI::PositiveNumber);
  evaluate->add_option("--threshold", threshold, "success threshold in radians (default: test_threshold)");

  std::vector<std::string> configs;
  auto* ablate = app.add_subcommand("ablate", "train and compare several configurations");
  ablate->add_option("--configs", configs, "JSON run configurations")->required()->check(CLI::ExistingFile);

  std::string a, b;
  int failure_trials = 0;
  auto* failures = app.add_subcommand("failures", "failure taxonomy of two checkpoints");
  failures->add_option("--a", a, "first checkpoint")->required()->check(CLI::ExistingFile);
  failures->add_option("--b", b, "second checkpoint")->required()->check(CLI::ExistingFile);
  failures->add_option("--trials", failure_trials, "number of trials")->required()->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(config_path, seed);
    if (*evaluate) return cmd_evaluate(checkpoint, trials, threshold);
    if (*ablate) {
      if (configs.size() < 2) throw ConfigError("ablate needs at least two configurations");
      return cmd_ablate(configs);
    }
    if (*failures) return cmd_failures(a, b, failure_trials);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const VersionError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

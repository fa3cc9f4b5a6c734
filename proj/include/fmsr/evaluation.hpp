#pragma once

// Policies, fixed seeded trial sets, and the comparison reports built on them.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fmsr/agents.hpp"
#include "fmsr/planar_hand_env.hpp"
#include "fmsr/stability_metrics.hpp"

namespace fmsr {

using JointActions = std::vector<std::vector<double>>;

class Policy {
 public:
  virtual ~Policy() = default;
  virtual JointActions act(const EnvState& state, const Goal& goal, const JointActions& prev_actions) const = 0;
};

/// Noise-free actor means of a learner.
class ActorPolicy : public Policy {
 public:
  explicit ActorPolicy(const MultiAgentLearner& learner) : learner_(&learner) {}
  JointActions act(const EnvState& state, const Goal& goal, const JointActions& prev_actions) const override;

 private:
  const MultiAgentLearner* learner_;
};

/// Every joint holds still.
class ZeroPolicy : public Policy {
 public:
  explicit ZeroPolicy(std::vector<int> dofs) : dofs_(std::move(dofs)) {}
  JointActions act(const EnvState& state, const Goal& goal, const JointActions& prev_actions) const override;

 private:
  std::vector<int> dofs_;
};

/// Opens every finger; the object loses its support and drops.
class ReleasePolicy : public Policy {
 public:
  explicit ReleasePolicy(const PlanarHandEnv& env) : env_(&env) {}
  JointActions act(const EnvState& state, const Goal& goal, const JointActions& prev_actions) const override;

 private:
  const PlanarHandEnv* env_;
};

/// Hand-written proportional controller: swings the fingers in the direction
/// of the remaining angle error and holds the bend.
class RotatePolicy : public Policy {
 public:
  RotatePolicy(const PlanarHandEnv& env, double gain) : env_(&env), gain_(gain) {}
  JointActions act(const EnvState& state, const Goal& goal, const JointActions& prev_actions) const override;

 private:
  const PlanarHandEnv* env_;
  double gain_;
};

/// Runs one episode from reset(seed). The first trajectory entry is the reset
/// state; the episode stops early when the object falls.
std::pair<Trajectory, Goal> run_episode(const PlanarHandEnv& env, const Policy& policy, std::uint64_t seed);

/// Seed of trial k of the set declared by `set_seed`.
std::uint64_t trial_seed(std::uint64_t set_seed, int trial);

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  Goal goal;
  TrialSummary summary;
  std::vector<StabilityRecord> records;
};

struct EvaluationResult {
  std::uint64_t set_seed = 0;
  int n_trials = 0;
  double threshold = 0.0;
  double success_rate = 0.0;
  std::vector<TrialResult> trials;
};

/// Trials run on up to `workers` threads; results are ordered by trial index.
EvaluationResult evaluate_policy(const PlanarHandEnv& env, const Policy& policy, int n_trials, double threshold,
                                 std::uint64_t set_seed, int workers = 1);

/// Column order: trial, seed, goal, outcome, success, steps, total_contact,
/// q_msv, q_vew, q_msv_deriv, q_vew_deriv, q_dcc (per-trial means).
void write_trials_csv(std::ostream& out, const EvaluationResult& result);

// --- Ablation comparison ----------------------------------------------------

struct AblationRow {
  std::string name;
  double success_rate = 0.0;
  MeanStd total_contact, q_msv, q_vew, q_msv_deriv, q_vew_deriv;
  std::optional<MeanStd> q_dcc;
  /// Test-set success over all trained seeds of the configuration.
  std::optional<double> seed_mean_success;
  std::optional<double> seed_best_success;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  /// Index of the best row per column, in header order; -1 when undefined.
  std::vector<int> best;
};

/// Statistics are over the per-trial means. Throws ContractViolation for
/// fewer than two rows or evaluations on different trial sets.
AblationReport ablation_report(const std::vector<std::string>& names, const std::vector<EvaluationResult>& evaluations);

/// Header: configuration, success_rate, total_contact_mean, total_contact_std,
/// q_msv_mean, q_msv_std, q_vew_mean, q_vew_std, q_msv_deriv_mean,
/// q_msv_deriv_std, q_vew_deriv_mean, q_vew_deriv_std, q_dcc_mean, q_dcc_std,
/// seed_mean_success, seed_best_success, best_columns.
void write_ablation_csv(std::ostream& out, const AblationReport& report);
std::vector<std::string> ablation_columns();

// --- Failure taxonomy -------------------------------------------------------

struct FailureRow {
  std::string name;
  int trials = 0;
  int failures = 0;
  int incomplete = 0;
  int drop = 0;
  std::optional<double> incomplete_pct;  // of failures; empty without failures
  std::optional<double> drop_pct;
  double drop_fraction = 0.0;  // of all trials
};

FailureRow failure_row(const std::string& name, const EvaluationResult& evaluation);

/// Header: policy, trials, failures, incomplete, drop, incomplete_pct,
/// drop_pct, drop_fraction.
void write_failure_csv(std::ostream& out, const std::vector<FailureRow>& rows);

/// Header: policy, trial, seed, outcome.
void write_outcome_labels(std::ostream& out, const std::string& name, const EvaluationResult& evaluation,
                          bool header);

}  // namespace fmsr

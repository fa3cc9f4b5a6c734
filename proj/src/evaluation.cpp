#include "fmsr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "fmsr/error.hpp"
#include "fmsr/rng.hpp"

namespace fmsr {

JointActions ActorPolicy::act(const EnvState& state, const Goal& goal, const JointActions& prev_actions) const {
  const auto x = learner_->layout().global_state(state, goal);
  JointActions out;
  for (const Agent& a : learner_->agents()) {
    const auto o = a.observe(x, prev_actions);
    auto mu = a.actor.forward(o);
    for (double& v : mu) v = std::clamp(v, -1.0, 1.0);
    out.push_back(std::move(mu));
  }
  return out;
}

JointActions ZeroPolicy::act(const EnvState&, const Goal&, const JointActions&) const {
  JointActions out;
  for (int d : dofs_) out.emplace_back(d, 0.0);
  return out;
}

JointActions ReleasePolicy::act(const EnvState&, const Goal&, const JointActions&) const {
  JointActions out;
  for (int i = 0; i < env_->num_agents(); ++i) {
    const int d = env_->dofs()[i];
    out.emplace_back(d, 0.0);
    if (env_->roles()[i] == AgentRole::Wrist) continue;
    for (int j = (d + 1) / 2; j < d; ++j) out.back()[j] = 1.0;
  }
  return out;
}

JointActions RotatePolicy::act(const EnvState& state, const Goal& goal, const JointActions&) const {
  const double e = wrap_angle(goal.target_angle - state.object_angle);
  const double u = std::clamp(gain_ * e, -1.0, 1.0);
  JointActions out;
  for (int i = 0; i < env_->num_agents(); ++i) {
    const int d = env_->dofs()[i];
    out.emplace_back(d, 0.0);
    if (env_->roles()[i] == AgentRole::Wrist) continue;
    for (int j = 0; j < (d + 1) / 2; ++j) out.back()[j] = u;
  }
  return out;
}

std::pair<Trajectory, Goal> run_episode(const PlanarHandEnv& env, const Policy& policy, std::uint64_t seed) {
  auto [state, goal] = env.reset(seed);
  Trajectory traj;
  traj.push_back({state, env.contacts(state)});
  JointActions prev;
  for (int d : env.dofs()) prev.emplace_back(d, 0.0);
  for (int t = 0; t < env.config().max_episode_steps; ++t) {
    JointActions a = policy.act(state, goal, prev);
    StepResult r = env.step(state, a);
    state = r.state;
    traj.push_back({state, std::move(r.report)});
    prev = std::move(a);
    if (r.terminated) break;
  }
  return {std::move(traj), goal};
}

std::uint64_t trial_seed(std::uint64_t set_seed, int trial) {
  return mix_seed(set_seed, static_cast<std::uint64_t>(trial));
}

EvaluationResult evaluate_policy(const PlanarHandEnv& env, const Policy& policy, int n_trials, double threshold,
                                 std::uint64_t set_seed, int workers) {
  FMSR_REQUIRE(n_trials >= 1, "n_trials must be >= 1");
  FMSR_REQUIRE(threshold > 0.0, "success threshold must be positive");
  EvaluationResult result;
  result.set_seed = set_seed;
  result.n_trials = n_trials;
  result.threshold = threshold;
  result.trials.resize(n_trials);

  auto run_range = [&](int begin, int stride) {
    for (int k = begin; k < n_trials; k += stride) {
      TrialResult& tr = result.trials[k];
      tr.trial = k;
      tr.seed = trial_seed(set_seed, k);
      auto [traj, goal] = run_episode(env, policy, tr.seed);
      tr.goal = goal;
      tr.summary = summarize_trial(traj, goal, threshold, 10, env.config().time_step);
      tr.records = measure_trajectory(traj);
    }
  };
  workers = std::clamp(workers, 1, n_trials);
  if (workers == 1) {
    run_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_range, w, workers);
    for (auto& t : pool) t.join();
  }
  int successes = 0;
  for (const auto& tr : result.trials) successes += tr.summary.success ? 1 : 0;
  result.success_rate = static_cast<double>(successes) / n_trials;
  return result;
}

void write_trials_csv(std::ostream& out, const EvaluationResult& result) {
  out << "trial,seed,goal,outcome,success,steps,total_contact,q_msv,q_vew,q_msv_deriv,q_vew_deriv,q_dcc\n";
  out.precision(17);
  for (const auto& tr : result.trials) {
    const auto& s = tr.summary;
    out << tr.trial << ',' << tr.seed << ',' << tr.goal.target_angle << ',' << to_string(s.outcome) << ','
        << (s.success ? 1 : 0) << ',' << s.steps << ',' << s.total_contact << ',' << s.q_msv.mean << ','
        << s.q_vew.mean << ',' << s.q_msv_deriv.mean << ',' << s.q_vew_deriv.mean << ',';
    if (s.q_dcc) out << s.q_dcc->mean;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

std::vector<std::string> ablation_columns() {
  return {"configuration",    "success_rate",     "total_contact_mean", "total_contact_std", "q_msv_mean",
          "q_msv_std",        "q_vew_mean",       "q_vew_std",          "q_msv_deriv_mean",  "q_msv_deriv_std",
          "q_vew_deriv_mean", "q_vew_deriv_std",  "q_dcc_mean",         "q_dcc_std",         "seed_mean_success",
          "seed_best_success", "best_columns"};
}

AblationReport ablation_report(const std::vector<std::string>& names, const std::vector<EvaluationResult>& evaluations) {
  FMSR_REQUIRE(names.size() == evaluations.size(), "one name per evaluation");
  FMSR_REQUIRE(evaluations.size() >= 2, "an ablation report compares at least two configurations");
  for (const auto& e : evaluations)
    FMSR_REQUIRE(e.set_seed == evaluations.front().set_seed && e.n_trials == evaluations.front().n_trials &&
                     e.threshold == evaluations.front().threshold,
                 "evaluations were run on different test sets");

  AblationReport report;
  for (std::size_t r = 0; r < evaluations.size(); ++r) {
    AblationRow row;
    row.name = names[r];
    row.success_rate = evaluations[r].success_rate;
    std::vector<double> contact, msv, vew, dmsv, dvew, dcc;
    for (const auto& tr : evaluations[r].trials) {
      contact.push_back(static_cast<double>(tr.summary.total_contact));
      msv.push_back(tr.summary.q_msv.mean);
      vew.push_back(tr.summary.q_vew.mean);
      dmsv.push_back(tr.summary.q_msv_deriv.mean);
      dvew.push_back(tr.summary.q_vew_deriv.mean);
      if (tr.summary.q_dcc) dcc.push_back(tr.summary.q_dcc->mean);
    }
    row.total_contact = mean_std(contact);
    row.q_msv = mean_std(msv);
    row.q_vew = mean_std(vew);
    row.q_msv_deriv = mean_std(dmsv);
    row.q_vew_deriv = mean_std(dvew);
    if (!dcc.empty()) row.q_dcc = mean_std(dcc);
    report.rows.push_back(std::move(row));
  }

  // Higher is better except for the derivative magnitudes (smoother is
  // better) and the contact distance (compact is better).
  auto pick = [&](auto value, bool higher) {
    int best = -1;
    double best_v = 0.0;
    for (int r = 0; r < static_cast<int>(report.rows.size()); ++r) {
      const std::optional<double> v = value(report.rows[r]);
      if (!v) continue;
      if (best < 0 || (higher ? *v > best_v : *v < best_v)) {
        best = r;
        best_v = *v;
      }
    }
    return best;
  };
  using Row = AblationRow;
  report.best = {
      pick([](const Row& r) { return std::optional<double>(r.success_rate); }, true),
      pick([](const Row& r) { return std::optional<double>(r.total_contact.mean); }, true),
      pick([](const Row& r) { return std::optional<double>(r.q_msv.mean); }, true),
      pick([](const Row& r) { return std::optional<double>(r.q_vew.mean); }, true),
      pick([](const Row& r) { return std::optional<double>(r.q_msv_deriv.mean); }, false),
      pick([](const Row& r) { return std::optional<double>(r.q_vew_deriv.mean); }, false),
      pick([](const Row& r) { return r.q_dcc ? std::optional<double>(r.q_dcc->mean) : std::nullopt; }, false),
  };
  return report;
}

void write_ablation_csv(std::ostream& out, const AblationReport& report) {
  const auto cols = ablation_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  out.precision(10);
  static const char* kBestNames[] = {"success_rate", "total_contact", "q_msv", "q_vew",
                                     "q_msv_deriv",  "q_vew_deriv",   "q_dcc"};
  for (int r = 0; r < static_cast<int>(report.rows.size()); ++r) {
    const auto& row = report.rows[r];
    out << row.name << ',' << row.success_rate << ',' << row.total_contact.mean << ',' << row.total_contact.std << ','
        << row.q_msv.mean << ',' << row.q_msv.std << ',' << row.q_vew.mean << ',' << row.q_vew.std << ','
        << row.q_msv_deriv.mean << ',' << row.q_msv_deriv.std << ',' << row.q_vew_deriv.mean << ','
        << row.q_vew_deriv.std << ',';
    if (row.q_dcc) out << row.q_dcc->mean << ',' << row.q_dcc->std;
    else out << ',';
    out << ',';
    if (row.seed_mean_success) out << *row.seed_mean_success;
    out << ',';
    if (row.seed_best_success) out << *row.seed_best_success;
    out << ',';
    std::string flags;
    for (std::size_t c = 0; c < report.best.size(); ++c)
      if (report.best[c] == r) flags += (flags.empty() ? "" : ";") + std::string(kBestNames[c]);
    out << flags << '\n';
  }
}

// ---------------------------------------------------------------------------

FailureRow failure_row(const std::string& name, const EvaluationResult& evaluation) {
  FailureRow row;
  row.name = name;
  row.trials = evaluation.n_trials;
  for (const auto& tr : evaluation.trials) {
    if (tr.summary.outcome == Outcome::Incomplete) ++row.incomplete;
    if (tr.summary.outcome == Outcome::Drop) ++row.drop;
  }
  row.failures = row.incomplete + row.drop;
  if (row.failures > 0) {
    row.incomplete_pct = 100.0 * row.incomplete / row.failures;
    row.drop_pct = 100.0 * row.drop / row.failures;
  }
  row.drop_fraction = row.trials > 0 ? static_cast<double>(row.drop) / row.trials : 0.0;
  return row;
}

void write_failure_csv(std::ostream& out, const std::vector<FailureRow>& rows) {
  out << "policy,trials,failures,incomplete,drop,incomplete_pct,drop_pct,drop_fraction\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << r.name << ',' << r.trials << ',' << r.failures << ',' << r.incomplete << ',' << r.drop << ',';
    if (r.incomplete_pct) out << *r.incomplete_pct;
    out << ',';
    if (r.drop_pct) out << *r.drop_pct;
    out << ',' << r.drop_fraction << '\n';
  }
}

void write_outcome_labels(std::ostream& out, const std::string& name, const EvaluationResult& evaluation,
                          bool header) {
  if (header) out << "policy,trial,seed,outcome\n";
  for (const auto& tr : evaluation.trials)
    out << name << ',' << tr.trial << ',' << tr.seed << ',' << to_string(tr.summary.outcome) << '\n';
}

}  // namespace fmsr

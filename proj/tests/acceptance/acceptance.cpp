// Acceptance run: one PASS/FAIL line per criterion, details on the following
// indented lines. Exit status is the number of failed criteria (capped).

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <atomic>
#include <limits>
#include <mutex>
#include <iostream>
#include <sstream>
#include <thread>

#include "../support/bandit.hpp"
#include "../support/contacts.hpp"
#include "../support/fixtures.hpp"
#include "../support/gradcheck.hpp"
#include "../support/tabular.hpp"
#include "fmsr/config.hpp"
#include "fmsr/consensus.hpp"
#include "fmsr/error.hpp"
#include "fmsr/evaluation.hpp"
#include "fmsr/occupancy.hpp"
#include "fmsr/shadow_reward.hpp"
#include "fmsr/stability_metrics.hpp"
#include "fmsr/trainer.hpp"

using namespace fmsr;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// --- 1 ----------------------------------------------------------------------

Verdict occupancy_oracle() {
  Verdict v;
  double worst = 0.0;
  int mdps = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto m = test::random_mdp(seed);
    OccupancyTable t(0, test::tabular_spec(m.states, m.actions), m.gamma, 50, m.horizon);
    for (const auto& ep : m.episodes) t.update(test::features(ep));
    worst = std::max(worst, test::max_mass_error(t, oracle::discounted_counts(m.episodes, m.gamma)));
    ++mdps;
  }
  v.require(worst <= 1e-12, "max mass error " + fmt(worst) + " > 1e-12");
  v.note(std::to_string(mdps) + " random tabular MDPs, max |mass - brute force| = " + fmt(worst));
  return v;
}

// --- 2 ----------------------------------------------------------------------

Verdict gradients() {
  Verdict v;
  oracle::Lcg rng(2024);
  int points = 0, checked = 0, failed = 0;
  double worst = 0.0;
  for (bool full_hand : {false, true}) {
    EnvConfig ec;
    ec.num_fingers = full_hand ? 5 : 3;
    const PlanarHandEnv env(ec);
    const MultiAgentLearner learner(env, LearnerConfig{}, 7);
    for (const auto& agent : learner.agents()) {
      for (const Network* net : {&agent.actor, &agent.critic}) {
        for (int p = 0; p < 5; ++p) {
          const auto x = test::smooth_point(*net, rng);
          std::vector<double> cot(net->output_size());
          for (double& c : cot) c = rng.uniform(-1, 1);
          const auto r = test::check_network_gradient(*net, x, cot, rng, 40);
          checked += r.checked;
          failed += r.failed;
          worst = std::max(worst, r.worst);
          ++points;
        }
      }
    }
  }

  // Critic loss, through the targets and the minibatch assembly.
  const PlanarHandEnv env(test::three_finger_env());
  LearnerConfig lc;
  MultiAgentLearner learner(env, lc, 8);
  test::fill_buffer(env, learner, 2, 31);
  int loss_points = 0, loss_failed = 0;
  for (int b = 0; b < 5; ++b) {
    const Minibatch mb = learner.make_minibatch(learner.buffer().sample_indices(8));
    for (int agent = 0; agent < learner.num_agents(); ++agent) {
      const auto g = learner.critic_loss_gradient(agent, mb, 0.1);
      auto& p = learner.agents()[agent].critic.params();
      for (int k = 0; k < 5; ++k) {
        const auto j = static_cast<std::size_t>(rng.below(static_cast<int>(p.size())));
        const double keep = p[j], h = 1e-5;
        p[j] = keep + h;
        const double up = learner.critic_loss(agent, mb, 0.1);
        p[j] = keep - h;
        const double down = learner.critic_loss(agent, mb, 0.1);
        p[j] = keep;
        loss_failed += test::close_rel(g[j], (up - down) / (2 * h)) ? 0 : 1;
        ++loss_points;
      }
    }
  }
  v.require(points >= 100, "fewer than 100 network points");
  v.require(failed == 0, std::to_string(failed) + " network derivatives off by more than 1e-4");
  v.require(loss_failed == 0, std::to_string(loss_failed) + " critic-loss derivatives off by more than 1e-4");
  v.note(std::to_string(points) + " points on the default actor/critic networks (3- and 5-finger hands), " +
         std::to_string(checked) + " derivatives, worst relative error " + fmt(worst));
  v.note(std::to_string(loss_points) + " critic-loss derivatives");
  return v;
}

// --- 3 ----------------------------------------------------------------------

Verdict shadow_gradient_bandit() {
  Verdict v;
  const double cases[][2] = {{0.0, 0.5}, {0.3, -0.2}, {-0.6, 0.1}};
  std::uint64_t seed = 100;
  for (const auto& c : cases) {
    const auto r = test::gaussian_bandit(c[0], 0.2, c[1], 0.1, 100000, seed++);
    const double z = std::abs(r.estimate - r.exact) / r.standard_error;
    v.require(z <= 3.0, "theta=" + fmt(c[0]) + " off by " + fmt(z) + " standard errors");
    v.note("theta=" + fmt(c[0]) + " a*=" + fmt(c[1]) + ": estimate " + fmt(r.estimate, 6) + ", exact " +
           fmt(r.exact, 6) + ", " + fmt(z, 3) + " SE");
  }
  return v;
}

// --- 4 ----------------------------------------------------------------------

Verdict consensus_properties() {
  Verdict v;
  const MixingMatrix m = metropolis_weights(build_ring_topology(
      {AgentRole::Wrist, AgentRole::Thumb, AgentRole::Index, AgentRole::Middle, AgentRole::Ring, AgentRole::Little},
      false));
  v.require(m.topology.size() == 5, "ring should have 5 nodes");
  v.require(validate(m, 1e-12), "validate() rejects the Metropolis matrix");
  const double slem = second_largest_eigenvalue_modulus(m);
  v.require(slem < 1.0, "slem >= 1");

  oracle::Lcg rng(4);
  std::vector<std::vector<double>> p(5, std::vector<double>(32));
  for (auto& row : p)
    for (double& x : row) x = rng.uniform(-10, 10);
  std::vector<double> mean(32, 0.0);
  for (const auto& row : p)
    for (int k = 0; k < 32; ++k) mean[k] += row[k] / 5.0;
  auto disagreement = [&](const std::vector<std::vector<double>>& q) {
    double s = 0.0;
    for (const auto& row : q)
      for (int k = 0; k < 32; ++k) s += (row[k] - mean[k]) * (row[k] - mean[k]);
    return std::sqrt(s);
  };
  const double d0 = disagreement(p);
  double worst_mean = 0.0;
  bool geometric = true;
  auto q = p;
  for (int k = 1; k <= 60; ++k) {
    q = share(q, m);
    // Symmetric M: the deviation from the mean contracts by at least slem.
    geometric = geometric && disagreement(q) <= std::pow(slem, k) * d0 * (1 + 1e-9) + 1e-12;
    for (int j = 0; j < 32; ++j) {
      double s = 0.0;
      for (const auto& row : q) s += row[j] / 5.0;
      worst_mean = std::max(worst_mean, std::abs(s - mean[j]));
    }
  }
  v.require(geometric, "disagreement exceeded slem^k bound");
  v.require(worst_mean <= 1e-10, "mean drift " + fmt(worst_mean));
  v.require(share(p, MixingMatrix{Eigen::MatrixXd::Identity(5, 5), m.topology}) == p, "identity share changed values");
  v.note("slem = " + fmt(slem, 6) + ", disagreement " + fmt(d0) + " -> " + fmt(disagreement(q)) +
         " after 60 steps, max mean drift " + fmt(worst_mean));
  return v;
}

// --- 5 ----------------------------------------------------------------------

oracle::Mat to_rows(const Eigen::MatrixXd& m) {
  oracle::Mat r(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

Verdict stability_oracles() {
  Verdict v;
  oracle::Lcg rng(55);
  double worst = 0.0, worst_det = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector2d c(rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01));
    const auto g = build_grasp_matrix(test::random_report(rng, 2 + rng.below(8), c), c).matrix;
    const auto s = oracle::singular_values(to_rows(g));
    const double prod = s[0] * s[1] * s[2];
    worst = std::max(worst, std::abs(q_msv(g) - s[2]) / std::max(s[2], 1e-300));
    worst = std::max(worst, std::abs(q_vew(g) - prod) / std::max(prod, 1e-300));
    worst_det = std::max(worst_det, std::abs(std::sqrt(oracle::gram_det3(to_rows(g))) - prod) / prod);
  }
  v.require(worst <= 1e-8, "SVD oracle mismatch " + fmt(worst));
  v.require(worst_det <= 1e-8, "sqrt det vs product mismatch " + fmt(worst_det));

  double worst_motion = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector2d c(rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01));
    const ContactReport r = test::random_report(rng, 2 + rng.below(6), c);
    const double a = rng.uniform(-3, 3);
    const Eigen::Vector2d shift(rng.uniform(-1, 1), rng.uniform(-1, 1));
    ContactReport moved = r;
    for (auto& ct : moved.contacts) {
      ct.position = test::rotate(ct.position - c, a) + c + shift;
      ct.unit_normal = test::rotate(ct.unit_normal, a);
    }
    const auto g0 = build_grasp_matrix(r, c), g1 = build_grasp_matrix(moved, c + shift);
    worst_motion = std::max({worst_motion, std::abs(q_msv(g0) - q_msv(g1)), std::abs(q_vew(g0) - q_vew(g1)),
                             std::abs(*q_dcc(r, c) - *q_dcc(moved, c + shift))});
  }
  v.require(worst_motion <= 1e-9, "rigid-motion change " + fmt(worst_motion));

  const auto one = test::report_of({test::contact_at({0.01, 0.0}, {-1, 0}, 0)});
  const auto two =
      test::report_of({test::contact_at({0.01, 0.0}, {-1, 0}, 0), test::contact_at({0.0, -0.03}, {0, 1}, 1)});
  v.require(*q_dcc(one, {0.0, 0.0}) == 0.01, "q_dcc single contact");
  v.require(std::abs(*q_dcc(two, {0.0, 0.0}) - 0.02) <= 1e-15, "q_dcc two contacts");
  v.require(!q_dcc(ContactReport{}, {0.0, 0.0}), "q_dcc without contacts");
  v.note("100 grasp matrices: worst relative error " + fmt(worst) + " (SVD), " + fmt(worst_det) +
         " (sqrt det); rigid motions: " + fmt(worst_motion));
  return v;
}

// --- 6 ----------------------------------------------------------------------

Verdict shadow_range() {
  Verdict v;
  const double lo = -std::log(1.1), hi = -std::log(0.1);
  bool in_range = true, monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100; ++k) {
    const double mass = k / 99.0;
    const double f = shadow_log_term(mass, 0.1);
    in_range = in_range && f >= lo - 1e-15 && f <= hi + 1e-15;
    monotone = monotone && f < prev;
    prev = f;
  }
  v.require(in_range, "shadow term outside [-log 1.1, -log 0.1]");
  v.require(monotone, "shadow term not strictly decreasing in bad mass");

  // The same through occupancy tables: vary the mass outside the safe
  // region and the mass below the contact threshold.
  const BinningSpec spec = default_binning(0.05, 20, 1.5);
  RewardWeights w;
  SafeRegionSpec region;
  region.radius = 0.35 * 0.05;
  double prev_safe = std::numeric_limits<double>::infinity(), prev_contact = prev_safe;
  bool tables_ok = true;
  for (int k = 0; k <= 20; ++k) {
    OccupancyTable t(0, spec, 0.98, 50, 1);
    for (int e = 0; e < 20; ++e) {
      FeatureInputs in;
      in.object_offset = e < k ? 0.04 : 0.0;
      in.contact_count = e < k ? 2 : 15;
      t.update({extract_features(spec, in)});
    }
    const double s = safe_region_reward(t, region, w), c = contact_reward(t, w);
    tables_ok = tables_ok && s < prev_safe && c < prev_contact && s >= lo - 1e-15 && s <= hi + 1e-15 &&
                c >= lo - 1e-15 && c <= hi + 1e-15;
    prev_safe = s;
    prev_contact = c;
  }
  v.require(tables_ok, "table-level sweep out of range or not monotone");
  v.note("100-point mass sweep and 21-point table sweep within [" + fmt(lo) + ", " + fmt(hi) + "]");
  return v;
}

// --- 7 ----------------------------------------------------------------------

Verdict ordering_audit() {
  Verdict v;
  Trainer full(test::tiny_config(Ablation::DenseFmsrIs), 11);
  full.run();
  v.require(audit_is_ordered(full.audit(), true), "Dense+FMSR+IS audit out of order");
  int cycles = 0;
  for (const auto& e : full.audit()) cycles += e.stage == Stage::Occupancy;
  v.note(std::to_string(full.audit().size()) + " events over " + std::to_string(cycles) +
         " cycles in occupancy -> critic -> share -> actor order");

  RunConfig dc = test::tiny_config(Ablation::Dense);
  Trainer dense(dc, 11);
  dense.run();
  v.require(audit_is_ordered(dense.audit(), false), "Dense audit out of order");
  v.require(std::none_of(dense.audit().begin(), dense.audit().end(),
                         [](const StageEvent& e) { return e.stage == Stage::Share; }),
            "Dense run called share");
  v.require(dc.effective_alpha() == 0.0, "Dense alpha is not zero");

  // Critic targets are exactly r + gamma Q' and actor updates carry no
  // score-function term.
  MultiAgentLearner& l = dense.learner();
  const Minibatch mb = l.make_minibatch(l.buffer().sample_indices(32));
  bool targets_plain = true, actor_plain = true;
  for (int i = 0; i < l.num_agents(); ++i) {
    const auto y = l.critic_targets(i, mb, dc.effective_alpha());
    const Eigen::MatrixXd qn = l.agents()[i].target_critic.forward_batch(mb.next_critic_inputs);
    for (Eigen::Index c = 0; c < y.size(); ++c) {
      const double plain = mb.not_done(c) == 0.0 ? mb.rewards(i, c) : mb.rewards(i, c) + dc.agent.gamma * qn(0, c);
      targets_plain = targets_plain && y(c) == plain;
    }
    Agent without = l.agents()[i];
    auto g = l.actor_gradient(i, mb).values;
    for (double& x : g) x = -x;
    without.actor_optimizer.descend(without.actor.params(), g);
    const auto saved = l.agents()[i];
    EpisodeData ep = dense.collect_episode(5);
    l.update_actor(i, mb, {ep.trace}, dc.effective_alpha());
    actor_plain = actor_plain && l.agents()[i].actor.params() == without.actor.params();
    l.agents()[i] = saved;
  }
  v.require(targets_plain, "Dense critic targets differ from r + gamma Q'");
  v.require(actor_plain, "Dense actor step differs from the plain policy-gradient step");
  v.note("Dense: no share events, critic targets and actor steps equal the standard updates");
  return v;
}

// --- 8 ----------------------------------------------------------------------

struct SeedOutcome {
  Ablation ablation;
  std::uint64_t seed;
  double final_validation = 0.0;
  double drop_fraction = 0.0;
  bool has_failure_eval = false;
};

Verdict directional(const fs::path& out, int jobs) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Ablation> ablations{Ablation::DenseFmsrIs, Ablation::DenseFmsr, Ablation::Dense, Ablation::Sparse};
  const std::vector<std::uint64_t> seeds = desk_config(Ablation::Dense).seeds;

  std::vector<std::function<SeedOutcome()>> tasks;
  for (auto abl : ablations)
    for (auto seed : seeds)
      tasks.push_back([abl, seed, &out] {
        const RunConfig c = desk_config(abl);
        const TrainArtifacts art = train_run(c, seed, out);
        SeedOutcome r{abl, seed};
        const Checkpoint ck = load_checkpoint(art.checkpoint);
        // Final validation success, from the curve file.
        std::ifstream in(art.curve);
        std::string line, last;
        std::getline(in, line);
        while (std::getline(in, line))
          if (!line.empty()) last = line;
        r.final_validation = std::stod(last.substr(last.find(',') + 1));
        if (abl == Ablation::DenseFmsrIs || abl == Ablation::Sparse) {
          const auto eval = evaluate_policy(ck.env, ActorPolicy(ck.learner), c.failure_trials, c.test_threshold,
                                            c.failure_seed, c.rollout_workers);
          r.drop_fraction = failure_row(c.name, eval).drop_fraction;
          r.has_failure_eval = true;
        }
        return r;
      });

  std::vector<SeedOutcome> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::mutex err_mutex;
  std::string error;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < tasks.size(); k = next++) {
        try {
          results[k] = tasks[k]();
        } catch (const std::exception& e) {
          std::lock_guard lock(err_mutex);
          error = e.what();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (!error.empty()) {
    v.require(false, "training error: " + error);
    return v;
  }

  auto mean_of = [&](Ablation a, double SeedOutcome::*field) {
    double s = 0.0;
    int n = 0;
    for (const auto& r : results)
      if (r.ablation == a) {
        s += r.*field;
        ++n;
      }
    return s / n;
  };
  const double is = mean_of(Ablation::DenseFmsrIs, &SeedOutcome::final_validation);
  const double fmsr = mean_of(Ablation::DenseFmsr, &SeedOutcome::final_validation);
  const double dense = mean_of(Ablation::Dense, &SeedOutcome::final_validation);
  const double sparse = mean_of(Ablation::Sparse, &SeedOutcome::final_validation);
  const double drop_is = mean_of(Ablation::DenseFmsrIs, &SeedOutcome::drop_fraction);
  const double drop_sparse = mean_of(Ablation::Sparse, &SeedOutcome::drop_fraction);
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;

  {
    std::ofstream csv(out / "directional.csv");
    csv << "configuration,seed,final_validation_success,failure_set_drop_fraction\n";
    for (const auto& r : results) {
      csv << to_string(r.ablation) << ',' << r.seed << ',' << r.final_validation << ',';
      if (r.has_failure_eval) csv << r.drop_fraction;
      csv << '\n';
    }
  }

  v.require(is >= dense, "mean final validation Dense+FMSR+IS " + fmt(is) + " < Dense " + fmt(dense));
  v.require(fmsr >= dense, "mean final validation Dense+FMSR " + fmt(fmsr) + " < Dense " + fmt(dense));
  v.require(drop_is < drop_sparse,
            "failure-set drop fraction Dense+FMSR+IS " + fmt(drop_is) + " not below Sparse " + fmt(drop_sparse));
  v.require(minutes < 30.0, "runtime " + fmt(minutes) + " min over the 30 min budget");
  v.note("seeds " + std::to_string(seeds[0]) + "," + std::to_string(seeds[1]) + "," + std::to_string(seeds[2]) +
         "; mean final validation success: Dense+FMSR+IS " + fmt(is) + ", Dense+FMSR " + fmt(fmsr) + ", Dense " +
         fmt(dense) + ", Sparse " + fmt(sparse));
  v.note("mean drop fraction on the 500-trial failure set: Dense+FMSR+IS " + fmt(drop_is) + ", Sparse " +
         fmt(drop_sparse));
  v.note("wall time " + fmt(minutes, 3) + " min with " + std::to_string(jobs) + " concurrent runs; per-seed table in " +
         (out / "directional.csv").string());
  return v;
}

// --- 9 ----------------------------------------------------------------------

Verdict protocol() {
  Verdict v;
  const RunConfig c = desk_config(Ablation::DenseFmsrIs);
  v.require(c.train_threshold == 0.1 && c.test_threshold == 0.4, "default thresholds are not 0.1 / 0.4");
  auto at = [](double z) {
    EnvState s;
    s.object_angle = z;
    return s;
  };
  const Goal g{0.0};
  v.require(is_success(at(0.09), g, c.train_threshold), "0.09 should succeed at 0.1");
  v.require(!is_success(at(0.11), g, c.train_threshold), "0.11 should fail at 0.1");
  v.require(is_success(at(0.39), g, c.test_threshold), "0.39 should succeed at 0.4");
  v.require(!is_success(at(0.41), g, c.test_threshold), "0.41 should fail at 0.4");
  v.require(!is_success(at(-0.41), g, c.test_threshold), "-0.41 should fail at 0.4");

  // Percentage closure on every failure report of a spread of policies.
  const PlanarHandEnv env(c.env);
  const ZeroPolicy zero(env.dofs());
  const ReleasePolicy release(env);
  const RotatePolicy rotate(env, 1.0), gentle(env, 0.3);
  int reports = 0;
  for (const Policy* p : std::initializer_list<const Policy*>{&zero, &release, &rotate, &gentle}) {
    for (double thr : {0.1, 0.4, 3.2}) {
      const FailureRow row = failure_row("p", evaluate_policy(env, *p, 100, thr, c.failure_seed, 4));
      ++reports;
      v.require(row.failures == row.incomplete + row.drop, "failure counts do not add up");
      if (row.failures > 0)
        v.require(std::abs(*row.incomplete_pct + *row.drop_pct - 100.0) <= 1e-9, "percentages do not close");
      else
        v.require(!row.incomplete_pct && !row.drop_pct, "percentages without failures");
    }
  }
  v.note("boundaries 0.09/0.11 at 0.1 and 0.39/0.41 at 0.4; closure on " + std::to_string(reports) +
         " failure reports");
  return v;
}

// --- 10 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism(const fs::path& out) {
  Verdict v;
  RunConfig c = test::tiny_config(Ablation::DenseFmsrIs);
  c.epochs = 2;
  c.warmup_transitions = 64;
  std::vector<std::string> manifests, curves, checkpoints, outcomes;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = out / ("determinism_" + std::to_string(run));
    fs::remove_all(dir);
    const TrainArtifacts art = train_run(c, 11, dir);
    manifests.push_back(slurp(art.manifest));
    curves.push_back(slurp(art.curve));
    checkpoints.push_back(slurp(art.checkpoint));
    const Checkpoint ck = load_checkpoint(art.checkpoint);
    const auto eval = evaluate_policy(ck.env, ActorPolicy(ck.learner), 50, c.test_threshold, c.test_seed, 3);
    std::ostringstream labels;
    write_outcome_labels(labels, c.name, eval, true);
    write_trials_csv(labels, eval);
    outcomes.push_back(labels.str());
  }
  // Paths differ between the two directories; compare with them removed.
  auto strip = [](std::string m, const std::string& dir) {
    for (std::size_t p; (p = m.find(dir)) != std::string::npos;) m.erase(p, dir.size());
    return m;
  };
  const bool manifest_same = strip(manifests[0], "determinism_0") == strip(manifests[1], "determinism_1");
  v.require(manifest_same, "manifests differ");
  v.require(curves[0] == curves[1], "curves differ");
  v.require(checkpoints[0] == checkpoints[1], "checkpoints differ");
  v.require(outcomes[0] == outcomes[1], "evaluation outcomes differ");
  v.note("two runs of (" + c.name + ", seed 11): identical manifest, curve, checkpoint bytes and 50 test outcomes");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string out_dir = "acceptance_out";
  std::vector<int> only;
  int jobs = std::max(1u, std::thread::hardware_concurrency() / 2);
  app.add_option("--out", out_dir, "scratch and report directory");
  app.add_option("--only", only, "run only these criteria");
  app.add_option("--jobs", jobs, "concurrent training runs for criterion 8");
  CLI11_PARSE(app, argc, argv);
  const fs::path out(out_dir);
  fs::create_directories(out);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"occupancy oracle equivalence", occupancy_oracle},
      {"gradient correctness", gradients},
      {"shadow-gradient bandit oracle", shadow_gradient_bandit},
      {"consensus properties", consensus_properties},
      {"stability-metric oracles", stability_oracles},
      {"shadow-reward range and monotonicity", shadow_range},
      {"stage-order audit and Dense reduction", ordering_audit},
      {"directional end-to-end check", [&] { return directional(out / "directional", jobs); }},
      {"evaluation-protocol fidelity", protocol},
      {"determinism", [&] { return determinism(out); }},
  };
  const double budget_s[] = {1, 30, 30, 1, 0, 0, 0, 1800, 0, 0};

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s[k] > 0 && secs > budget_s[k] && id != 8)
      v.require(false, "runtime " + fmt(secs, 3) + " s over the " + fmt(budget_s[k]) + " s budget");
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[k].first << " ("
              << fmt(secs, 3) << " s)\n";
    for (const auto& n : v.notes) std::cout << "    " << n << '\n';
    std::cout.flush();
    failures += v.pass ? 0 : 1;
  }
  return std::min(failures, 100);
}

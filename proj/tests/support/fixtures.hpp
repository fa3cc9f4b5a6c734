#pragma once

// Small environments, learners and filled replay buffers shared by the tests.

#include <vector>

#include "fmsr/agents.hpp"
#include "fmsr/config.hpp"
#include "fmsr/trainer.hpp"
#include "oracles.hpp"

namespace test {

inline fmsr::EnvConfig three_finger_env() {
  fmsr::EnvConfig c;
  c.num_fingers = 3;
  return c;
}

/// Desk-scale network shapes with a short schedule, for tests that train.
inline fmsr::RunConfig tiny_config(fmsr::Ablation ablation) {
  fmsr::RunConfig c = fmsr::desk_config(ablation);
  c.name = "tiny_" + std::string(fmsr::to_string(ablation));
  c.epochs = 1;
  c.cycles_per_epoch = 2;
  c.batches_per_cycle = 2;
  c.warmup_transitions = 0;
  c.agent.batch_size = 16;
  c.agent.hidden_layers = {16, 16};
  c.eval_trials_validation = 5;
  c.eval_trials_test = 5;
  c.failure_trials = 5;
  c.seeds = {11};
  return c;
}

/// Fills a learner's buffer with random-action transitions of `env`.
inline void fill_buffer(const fmsr::PlanarHandEnv& env, fmsr::MultiAgentLearner& learner, int episodes,
                        std::uint64_t seed) {
  oracle::Lcg rng(seed);
  for (int e = 0; e < episodes; ++e) {
    auto [s, g] = env.reset(seed * 1000 + e);
    std::vector<std::vector<double>> prev;
    for (int d : env.dofs()) prev.emplace_back(d, 0.0);
    for (int t = 0; t < env.config().max_episode_steps; ++t) {
      std::vector<std::vector<double>> a;
      for (int d : env.dofs()) {
        a.emplace_back(d);
        for (double& v : a.back()) v = rng.uniform(-1, 1);
      }
      const auto r = env.step(s, a);
      fmsr::TransitionRecord rec;
      rec.x = learner.layout().global_state(s, g);
      rec.prev_actions = prev;
      rec.actions = a;
      rec.x_next = learner.layout().global_state(r.state, g);
      for (int i = 0; i < env.num_agents(); ++i) {
        rec.rewards.push_back(rng.uniform(-3, 0));
        rec.shadow.push_back(rng.uniform(0, 2.3));
      }
      rec.contacts = r.report;
      rec.done = rng.uniform() < 0.1;
      learner.buffer().add(rec);
      prev = a;
      s = r.state;
    }
  }
}

}  // namespace test

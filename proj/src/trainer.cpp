#include "fmsr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fmsr/binary_io.hpp"
#include "fmsr/error.hpp"
#include "fmsr/evaluation.hpp"
#include "fmsr/rng.hpp"

namespace fmsr {

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Occupancy: return "occupancy";
    case Stage::Critic: return "critic";
    case Stage::Share: return "share";
    case Stage::Actor: return "actor";
  }
  return "?";
}

bool audit_is_ordered(const std::vector<StageEvent>& events, bool sharing) {
  const std::vector<Stage> group =
      sharing ? std::vector<Stage>{Stage::Critic, Stage::Share, Stage::Actor} : std::vector<Stage>{Stage::Critic, Stage::Actor};
  std::size_t i = 0;
  while (i < events.size()) {
    const int epoch = events[i].epoch, cycle = events[i].cycle;
    if (events[i].stage != Stage::Occupancy) return false;
    ++i;
    while (i < events.size() && events[i].epoch == epoch && events[i].cycle == cycle) {
      for (Stage s : group) {
        if (i >= events.size() || events[i].epoch != epoch || events[i].cycle != cycle || events[i].stage != s)
          return false;
        ++i;
      }
    }
  }
  return true;
}

namespace {

BinningSpec binning_for(const RunConfig& c) {
  const auto& e = c.env;
  const int max_contacts = e.max_contacts();
  BinningSpec spec;
  spec.axes.push_back({Feature::ObjectOffset, c.occupancy.offset_bins, 0.0, e.palm_radius});
  spec.axes.push_back({Feature::ContactCount, max_contacts + 1, -0.5, max_contacts + 0.5});
  spec.axes.push_back({Feature::MeanJointPosition, c.occupancy.joint_bins, -e.joint_limit, e.joint_limit});
  spec.axes.push_back({Feature::MeanAction, c.occupancy.action_bins, -1.0, 1.0});
  return spec;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double validation_success(const PlanarHandEnv& env, const Policy& policy, int n_trials, double threshold,
                          std::uint64_t set_seed) {
  int ok = 0;
  for (int k = 0; k < n_trials; ++k) {
    const auto [traj, goal] = run_episode(env, policy, trial_seed(set_seed, k));
    ok += classify_outcome(traj, goal, threshold) == Outcome::Success ? 1 : 0;
  }
  return static_cast<double>(ok) / n_trials;
}

RunConfig validated(RunConfig c) {
  c.env.object_shape = c.task;
  c.validate();
  return c;
}

}  // namespace

Trainer::Trainer(RunConfig config, std::uint64_t seed)
    : config_(validated(std::move(config))), seed_(seed), env_(config_.env), learner_(env_, config_.agent, seed) {
  const BinningSpec spec = binning_for(config_);
  for (int i = 0; i < env_.num_agents(); ++i) {
    tables_.emplace_back(i, spec, config_.occupancy.gamma, config_.occupancy.window, config_.env.max_episode_steps);
    profiles_.push_back(default_profile(env_.roles()[i]));
  }
  shadow_.assign(env_.num_agents(), 0.0);
  if (config_.sharing_enabled()) {
    const Topology t = build_ring_topology(env_.roles(), config_.consensus.include_wrist);
    mixing_ = metropolis_weights(t);
    for (AgentRole r : t.agents) {
      const auto& roles = env_.roles();
      share_agents_.push_back(static_cast<int>(std::find(roles.begin(), roles.end(), r) - roles.begin()));
    }
  }
}

EpisodeData Trainer::collect_episode(std::uint64_t episode_seed) const {
  const int n = env_.num_agents();
  const auto& agents = learner_.agents();
  std::vector<NoiseProcess> noise;
  for (int i = 0; i < n; ++i)
    noise.emplace_back(config_.agent.exploration_sigma, env_.dofs()[i], mix_seed(episode_seed, 1000 + i));

  EpisodeData ep;
  ep.features.resize(n);
  auto [state, goal] = env_.reset(episode_seed);
  JointActions prev;
  for (int d : env_.dofs()) prev.emplace_back(d, 0.0);
  const double threshold = config_.train_threshold;
  ep.success = is_success(state, goal, threshold);

  for (int t = 0; t < config_.env.max_episode_steps; ++t) {
    const auto x = learner_.layout().global_state(state, goal);
    EpisodeStep step;
    step.x = x;
    step.prev_actions = prev;
    for (int i = 0; i < n; ++i) {
      const auto o = agents[i].observe(x, prev);
      ActionSample a = sample_action(agents[i], o, noise[i]);
      step.actions.push_back(std::move(a.clipped));
      step.raw_actions.push_back(std::move(a.raw));
    }
    const StepResult r = env_.step(state, step.actions);

    const double offset = (state.object_center - config_.env.palm_center).norm();
    for (int i = 0; i < n; ++i) {
      FeatureInputs in;
      in.object_offset = offset;
      in.contact_count = state.contact_count;
      in.mean_joint_position = mean(state.joint_positions[i]);
      in.mean_action = mean(step.actions[i]);
      ep.features[i].push_back(extract_features(tables_[i].spec(), in));
    }

    TransitionRecord rec;
    rec.x = x;
    rec.prev_actions = prev;
    rec.actions = step.actions;
    const double r_task = config_.sparse_reward() ? sparse_reward(r.state, goal, threshold)
                                                  : task_reward(r.state.object_angle, goal.target_angle);
    rec.rewards.assign(n, r_task);
    rec.shadow = shadow_;
    rec.x_next = learner_.layout().global_state(r.state, goal);
    rec.contacts = r.report;
    rec.done = config_.terminate_on_drop && r.terminated;
    rec.in_hand = r.state.object_height_flag == HeightFlag::OnPalm;
    ep.transitions.push_back(std::move(rec));

    prev = step.actions;
    ep.trace.push_back(std::move(step));
    state = r.state;
    ep.success = ep.success || is_success(state, goal, threshold);
    ep.dropped = ep.dropped || state.object_height_flag == HeightFlag::Fallen;
    if (config_.terminate_on_drop && r.terminated) break;
  }
  return ep;
}

void Trainer::refresh_shadow() {
  const SafeRegionSpec region = config_.safe_region();
  for (int i = 0; i < env_.num_agents(); ++i) {
    const double r2 = safe_region_reward(tables_[i], region, config_.reward);
    const double r3 = contact_reward(tables_[i], config_.reward);
    shadow_[i] = compose(profiles_[i], 0.0, r2, r3);
  }
}

void Trainer::share_actors() {
  const MixingMatrix& m = *mixing_;
  std::vector<std::vector<double>> params;
  for (int a : share_agents_) params.push_back(learner_.shared_actor_params(a));
  params = share(params, m);
  for (std::size_t k = 0; k < share_agents_.size(); ++k) learner_.set_shared_actor_params(share_agents_[k], params[k]);
  if (config_.consensus.share_critic) {
    params.clear();
    for (int a : share_agents_) params.push_back(learner_.shared_critic_params(a));
    params = share(params, m);
    for (std::size_t k = 0; k < share_agents_.size(); ++k)
      learner_.set_shared_critic_params(share_agents_[k], params[k]);
  }
}

void Trainer::run_cycle(int epoch, int cycle) {
  const int workers = config_.rollout_workers;
  const int per_worker = config_.episodes_per_worker;
  const std::uint64_t cycle_seed =
      mix_seed(seed_, static_cast<std::uint64_t>(epoch) * config_.cycles_per_epoch + static_cast<std::uint64_t>(cycle));

  // Rollouts: each worker owns its slot; results are merged in worker order.
  std::vector<std::vector<EpisodeData>> slots(workers);
  auto work = [&](int w) {
    for (int e = 0; e < per_worker; ++e)
      slots[w].push_back(collect_episode(mix_seed(cycle_seed, static_cast<std::uint64_t>(w * per_worker + e))));
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  std::vector<EpisodeTrace> traces;
  for (auto& slot : slots) {
    for (auto& ep : slot) {
      for (auto& rec : ep.transitions) learner_.buffer().add(std::move(rec));
      ++epoch_episodes_;
      epoch_successes_ += ep.success ? 1 : 0;
      epoch_drops_ += ep.dropped ? 1 : 0;
      traces.push_back(std::move(ep.trace));
    }
  }

  // Stage 1: occupancy, then the shadow values held for this cycle.
  for (auto& slot : slots)
    for (auto& ep : slot)
      for (int i = 0; i < env_.num_agents(); ++i) tables_[i].update(ep.features[i]);
  refresh_shadow();
  audit_.push_back({epoch, cycle, Stage::Occupancy});

  const double alpha = config_.effective_alpha();
  const std::size_t warmup = std::max<std::size_t>(1, static_cast<std::size_t>(config_.warmup_transitions));
  if (learner_.buffer().size() < warmup) return;
  for (int b = 0; b < config_.batches_per_cycle; ++b) {
    const auto indices = learner_.buffer().sample_indices(config_.agent.batch_size);
    Minibatch mb = learner_.make_minibatch(indices);
    // The cycle's shadow value, earned only while the hand still holds the
    // object: a fallen object has no in-hand behavior to score.
    for (int i = 0; i < learner_.num_agents(); ++i) mb.shadow.row(i) = shadow_[i] * mb.in_hand.transpose();

    for (int i = 0; i < learner_.num_agents(); ++i) {
      epoch_loss_sum_ += learner_.update_critic(i, mb, alpha);
      ++epoch_loss_count_;
    }
    audit_.push_back({epoch, cycle, Stage::Critic});

    if (mixing_) {
      share_actors();
      audit_.push_back({epoch, cycle, Stage::Share});
    }

    for (int i = 0; i < learner_.num_agents(); ++i) learner_.update_actor(i, mb, traces, alpha);
    audit_.push_back({epoch, cycle, Stage::Actor});
  }
}

EpochRecord Trainer::run_epoch(int epoch) {
  epoch_episodes_ = epoch_successes_ = epoch_drops_ = 0;
  epoch_loss_sum_ = 0.0;
  epoch_loss_count_ = 0;
  for (int c = 0; c < config_.cycles_per_epoch; ++c) run_cycle(epoch, c);
  learner_.update_targets(config_.tau_soft);

  EpochRecord rec;
  rec.epoch = epoch;
  const ActorPolicy policy(learner_);
  rec.validation_success = validation_success(env_, policy, config_.eval_trials_validation, config_.train_threshold,
                                              config_.validation_seed);
  rec.train_success = epoch_episodes_ ? static_cast<double>(epoch_successes_) / epoch_episodes_ : 0.0;
  rec.train_drop = epoch_episodes_ ? static_cast<double>(epoch_drops_) / epoch_episodes_ : 0.0;
  rec.critic_loss = epoch_loss_count_ ? epoch_loss_sum_ / epoch_loss_count_ : 0.0;
  rec.shadow = shadow_;
  curve_.push_back(rec);
  return rec;
}

void Trainer::run() {
  for (int e = static_cast<int>(curve_.size()); e < config_.epochs; ++e) run_epoch(e);
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

std::string join_doubles(const std::vector<double>& v, char sep = ',') {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? std::string(1, sep) : "") << v[i];
  return os.str();
}

}  // namespace

void write_manifest(std::ostream& out, const Trainer& trainer, bool partial, const TrainArtifacts& paths) {
  const RunConfig& c = trainer.config();
  out.precision(17);
  out << "format=fmsr-manifest-1\n";
  out << "name=" << c.name << '\n';
  out << "config_hash=" << hex64(config_hash(c)) << '\n';
  out << "seed=" << trainer.seed() << '\n';
  out << "seeds=";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) out << (i ? "," : "") << c.seeds[i];
  out << '\n';
  out << "task=" << to_string(c.task) << '\n';
  out << "ablation=" << to_string(c.ablation) << '\n';
  out << "reward_mode=" << (c.sparse_reward() ? "sparse" : "dense") << '\n';
  out << "effective_alpha=" << c.effective_alpha() << '\n';
  out << "information_sharing=" << (c.sharing_enabled() ? "on" : "off") << '\n';
  out << "agents=";
  for (std::size_t i = 0; i < trainer.env().roles().size(); ++i)
    out << (i ? "," : "") << to_string(trainer.env().roles()[i]);
  out << '\n';
  if (const auto& m = trainer.mixing()) {
    out << "mixing_nodes=";
    for (int k = 0; k < m->topology.size(); ++k) out << (k ? "," : "") << to_string(m->topology.agents[k]);
    out << "\nmixing_matrix=";
    for (Eigen::Index r = 0; r < m->weights.rows(); ++r) {
      std::vector<double> row(m->weights.cols());
      for (Eigen::Index col = 0; col < m->weights.cols(); ++col) row[col] = m->weights(r, col);
      out << (r ? ";" : "") << join_doubles(row);
    }
    out << "\nmixing_slem=" << second_largest_eigenvalue_modulus(*m) << '\n';
  } else {
    out << "mixing_matrix=none\n";
  }
  std::vector<double> val;
  for (const auto& e : trainer.curve()) val.push_back(e.validation_success);
  out << "epochs_completed=" << trainer.curve().size() << '\n';
  out << "validation_success=" << join_doubles(val) << '\n';
  out << "final_validation_success=" << (val.empty() ? 0.0 : val.back()) << '\n';
  out << "stage_order_ok=" << (audit_is_ordered(trainer.audit(), c.sharing_enabled()) ? "true" : "false") << '\n';
  out << "artifact.curve=" << paths.curve.filename().string() << '\n';
  out << "artifact.audit=" << paths.audit.filename().string() << '\n';
  out << "artifact.checkpoint=" << paths.checkpoint.filename().string() << '\n';
  out << "artifact.timings=" << paths.timings.filename().string() << '\n';
  out << "partial=" << (partial ? "true" : "false") << '\n';
}

void write_curve_csv(std::ostream& out, const std::vector<EpochRecord>& curve) {
  out << "epoch,validation_success,train_success,train_drop,critic_loss,shadow\n";
  out.precision(17);
  for (const auto& e : curve)
    out << e.epoch << ',' << e.validation_success << ',' << e.train_success << ',' << e.train_drop << ','
        << e.critic_loss << ',' << join_doubles(e.shadow, ';') << '\n';
}

void write_audit_csv(std::ostream& out, const std::vector<StageEvent>& events) {
  out << "epoch,cycle,stage\n";
  for (const auto& e : events) out << e.epoch << ',' << e.cycle << ',' << to_string(e.stage) << '\n';
}

TrainArtifacts train_run(const RunConfig& config, std::uint64_t seed, const std::filesystem::path& output_dir) {
  TrainArtifacts paths;
  paths.dir = output_dir / config.name / ("seed_" + std::to_string(seed));
  std::filesystem::create_directories(paths.dir);
  paths.manifest = paths.dir / "manifest.txt";
  paths.curve = paths.dir / "curve.csv";
  paths.audit = paths.dir / "stage_audit.csv";
  paths.checkpoint = paths.dir / "checkpoint.bin";
  paths.timings = paths.dir / "timings.txt";

  Trainer trainer(config, seed);
  std::ofstream timings(paths.timings);
  timings << "epoch,seconds\n";
  const auto start = std::chrono::steady_clock::now();
  auto write_all = [&](bool partial) {
    std::ofstream m(paths.manifest);
    write_manifest(m, trainer, partial, paths);
    std::ofstream c(paths.curve);
    write_curve_csv(c, trainer.curve());
    std::ofstream a(paths.audit);
    write_audit_csv(a, trainer.audit());
  };
  try {
    for (int e = 0; e < config.epochs; ++e) {
      const auto t0 = std::chrono::steady_clock::now();
      trainer.run_epoch(e);
      timings << e << ',' << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << '\n';
    }
    save_checkpoint(paths.checkpoint, trainer);
  } catch (...) {
    write_all(true);
    throw;
  }
  timings << "total," << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << '\n';
  write_all(false);
  return paths;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kCheckpointMagic[] = "FMSRCKP1";

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Trainer& trainer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, 8);
  io::write_string(out, to_json(trainer.config()));
  io::write_pod<std::uint64_t>(out, config_hash(trainer.config()));
  io::write_pod<std::uint64_t>(out, trainer.seed());
  const auto& agents = trainer.learner().agents();
  io::write_pod<std::uint64_t>(out, agents.size());
  for (const Agent& a : agents) {
    a.actor.write(out);
    a.critic.write(out);
    a.target_actor.write(out);
    a.target_critic.write(out);
  }
  io::write_pod<std::uint64_t>(out, trainer.tables().size());
  for (const auto& t : trainer.tables()) t.write(out);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw VersionError("cannot open checkpoint " + path.string());
  io::expect_magic(in, kCheckpointMagic);
  RunConfig config;
  try {
    config = config_from_json(io::read_string(in));
  } catch (const ConfigError& e) {
    throw VersionError(std::string("checkpoint config does not parse: ") + e.what());
  }
  const auto hash = io::read_pod<std::uint64_t>(in);
  if (hash != config_hash(config)) throw VersionError("checkpoint config hash mismatch");
  const auto seed = io::read_pod<std::uint64_t>(in);
  PlanarHandEnv env(config.env);
  MultiAgentLearner learner(env, config.agent, seed);
  const auto n = io::read_pod<std::uint64_t>(in);
  if (n != static_cast<std::uint64_t>(learner.num_agents())) throw VersionError("checkpoint agent count mismatch");
  auto load_into = [&](Network& net) {
    Network loaded = Network::read(in);
    if (!(loaded.layout() == net.layout())) throw VersionError("checkpoint network shape does not match its config");
    net = std::move(loaded);
  };
  for (Agent& a : learner.agents()) {
    load_into(a.actor);
    load_into(a.critic);
    load_into(a.target_actor);
    load_into(a.target_critic);
  }
  std::vector<OccupancyTable> tables;
  const auto n_tables = io::read_pod<std::uint64_t>(in);
  if (n_tables != n) throw VersionError("checkpoint table count mismatch");
  for (std::uint64_t i = 0; i < n_tables; ++i) tables.push_back(OccupancyTable::read(in));
  return Checkpoint{std::move(config), seed, std::move(env), std::move(learner), std::move(tables)};
}

std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b) {
  const auto fa = nlohmann::json::parse(to_json(a)).flatten();
  const auto fb = nlohmann::json::parse(to_json(b)).flatten();
  std::vector<std::string> keys;
  for (const auto& [k, v] : fa.items())
    if (!fb.contains(k) || fb.at(k) != v) keys.push_back(k);
  for (const auto& [k, v] : fb.items())
    if (!fa.contains(k)) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace fmsr

#pragma once

// The training loop. Every cycle collects episodes, then runs the four update
// stages in a fixed order: occupancy/shadow refresh, critic, information
// sharing, actor (the last three once per minibatch). Targets move once per
// epoch.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fmsr/agents.hpp"
#include "fmsr/config.hpp"
#include "fmsr/consensus.hpp"
#include "fmsr/occupancy.hpp"
#include "fmsr/planar_hand_env.hpp"
#include "fmsr/shadow_reward.hpp"

namespace fmsr {

enum class Stage { Occupancy, Critic, Share, Actor };
std::string_view to_string(Stage s);

struct StageEvent {
  int epoch = 0;
  int cycle = 0;
  Stage stage = Stage::Occupancy;

  bool operator==(const StageEvent&) const = default;
};

/// True iff every cycle is one Occupancy event followed by one or more
/// (Critic, Share, Actor) groups, or (Critic, Actor) when sharing is off.
bool audit_is_ordered(const std::vector<StageEvent>& events, bool sharing);

struct EpochRecord {
  int epoch = 0;
  double validation_success = 0.0;
  double train_success = 0.0;  // fraction of this epoch's rollouts
  double train_drop = 0.0;
  double critic_loss = 0.0;    // mean over agents and minibatches
  std::vector<double> shadow;  // per agent, at epoch end
};

/// Transitions and per-agent occupancy features of one collected episode.
struct EpisodeData {
  std::vector<TransitionRecord> transitions;
  EpisodeTrace trace;
  std::vector<std::vector<std::vector<double>>> features;  // agent -> step -> feature vector
  bool success = false;
  bool dropped = false;
};

class Trainer {
 public:
  Trainer(RunConfig config, std::uint64_t seed);

  const RunConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const PlanarHandEnv& env() const { return env_; }
  MultiAgentLearner& learner() { return learner_; }
  const MultiAgentLearner& learner() const { return learner_; }
  const std::vector<OccupancyTable>& tables() const { return tables_; }
  const std::optional<MixingMatrix>& mixing() const { return mixing_; }
  const std::vector<StageEvent>& audit() const { return audit_; }
  const std::vector<EpochRecord>& curve() const { return curve_; }
  const std::vector<double>& shadow() const { return shadow_; }

  /// One rollout with exploration noise, as a worker would run it.
  EpisodeData collect_episode(std::uint64_t episode_seed) const;

  void run_cycle(int epoch, int cycle);
  EpochRecord run_epoch(int epoch);
  /// All epochs of the config.
  void run();

 private:
  void refresh_shadow();
  void share_actors();

  RunConfig config_;
  std::uint64_t seed_;
  PlanarHandEnv env_;
  MultiAgentLearner learner_;
  std::vector<OccupancyTable> tables_;
  std::vector<AgentRewardProfile> profiles_;
  std::optional<MixingMatrix> mixing_;
  std::vector<int> share_agents_;  // agent index per mixing node
  std::vector<double> shadow_;
  std::vector<StageEvent> audit_;
  std::vector<EpochRecord> curve_;

  // Accumulators of the running epoch.
  int epoch_episodes_ = 0, epoch_successes_ = 0, epoch_drops_ = 0;
  double epoch_loss_sum_ = 0.0;
  int epoch_loss_count_ = 0;
};

// --- Run artifacts ----------------------------------------------------------

struct TrainArtifacts {
  std::filesystem::path dir;
  std::filesystem::path manifest;
  std::filesystem::path curve;
  std::filesystem::path audit;
  std::filesystem::path checkpoint;
  std::filesystem::path timings;
};

/// Trains one seed and writes manifest, curve, audit log, timings and the
/// checkpoint under <output_dir>/<name>/seed_<seed>. On failure the manifest
/// is still written, with partial=true, and the error is rethrown.
TrainArtifacts train_run(const RunConfig& config, std::uint64_t seed, const std::filesystem::path& output_dir);

/// key=value lines; no timings so that reruns compare equal.
void write_manifest(std::ostream& out, const Trainer& trainer, bool partial, const TrainArtifacts& paths);
void write_curve_csv(std::ostream& out, const std::vector<EpochRecord>& curve);
void write_audit_csv(std::ostream& out, const std::vector<StageEvent>& events);

// --- Checkpoints ------------------------------------------------------------

struct Checkpoint {
  RunConfig config;
  std::uint64_t seed = 0;
  PlanarHandEnv env;
  MultiAgentLearner learner;
  std::vector<OccupancyTable> tables;
};

void save_checkpoint(const std::filesystem::path& path, const Trainer& trainer);
/// Throws VersionError on a bad magic, truncated data, a config hash that
/// does not match the embedded config, or networks that do not fit it.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Flattened JSON keys whose values differ between two configs.
std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b);

}  // namespace fmsr

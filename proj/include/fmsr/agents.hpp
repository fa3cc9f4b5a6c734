#pragma once

// Per-agent actor-critic learners: every critic sees the global state and all
// actions, every actor sees its own joints, the object, the goal and its
// neighbors' most recent actions.

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "fmsr/consensus.hpp"
#include "fmsr/network.hpp"
#include "fmsr/planar_hand_env.hpp"
#include "fmsr/rng.hpp"

namespace fmsr {

/// Layout of the global state vector x.
///
/// Object block (13 entries): sin z, cos z, scaled angular velocity, center
/// offset (2, in palm radii), sin z_g, cos z_g, sin e, cos e, e / pi where
/// e = wrap(z_g - z), contact count / max contacts, step / T, fallen flag.
/// Then for every
/// agent its joint positions / joint_limit followed by its scaled joint
/// velocities.
class ObservationLayout {
 public:
  static constexpr int kObjectBlock = 13;

  explicit ObservationLayout(const PlanarHandEnv& env);

  int dim() const { return dim_; }
  std::vector<double> global_state(const EnvState& state, const Goal& goal) const;
  /// Indices of x that agent `agent` observes locally.
  const std::vector<int>& local_indices(int agent) const { return local_indices_[agent]; }

 private:
  EnvConfig config_;
  std::vector<int> dofs_;
  int dim_ = 0;
  std::vector<int> joint_offset_;
  std::vector<std::vector<int>> local_indices_;
};

struct AgentSpec {
  AgentRole role = AgentRole::Wrist;
  int index = 0;
  int action_dim = 0;
  std::vector<int> neighbor_ids;          // agent indices
  std::vector<int> observation_indices;   // into x
  std::vector<int> neighbor_action_dims;  // parallel to neighbor_ids
  int global_state_dim = 0;
  int total_action_dim = 0;

  int actor_input_dim() const;
  int critic_input_dim() const { return global_state_dim + total_action_dim; }
};

/// Agent specs for an environment; neighbors follow the finger loop with the
/// wrist linked to thumb and index.
std::vector<AgentSpec> make_agent_specs(const PlanarHandEnv& env, const ObservationLayout& layout);

struct TransitionRecord {
  std::vector<double> x;
  std::vector<std::vector<double>> prev_actions;  // actions that led to x
  std::vector<std::vector<double>> actions;
  std::vector<double> rewards;
  std::vector<double> shadow;
  std::vector<double> x_next;
  ContactReport contacts;
  bool done = false;
  bool in_hand = true;  // object still on the palm after the step
};

class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t sampling_seed);

  void add(TransitionRecord record);
  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }
  const TransitionRecord& at(std::size_t i) const { return records_.at(i); }
  /// One index sequence, shared by every agent of an update.
  std::vector<std::size_t> sample_indices(std::size_t batch);

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<TransitionRecord> records_;
  SplitMix64 rng_;
};

class NoiseProcess {
 public:
  NoiseProcess(std::vector<double> sigma, std::uint64_t seed) : sigma_(std::move(sigma)), rng_(seed) {}
  NoiseProcess(double sigma, int dims, std::uint64_t seed) : NoiseProcess(std::vector<double>(dims, sigma), seed) {}

  std::vector<double> sample();
  const std::vector<double>& sigma() const { return sigma_; }

 private:
  std::vector<double> sigma_;
  SplitMix64 rng_;
};

struct LearnerConfig {
  std::vector<int> hidden_layers{64, 64};
  double actor_learning_rate = 1e-3;
  double critic_learning_rate = 1e-3;
  double gamma = 0.98;
  double exploration_sigma = 0.2;
  std::size_t replay_capacity = 100000;
  std::size_t batch_size = 256;
  /// Subtract the window-mean critic value inside the score-function estimate.
  bool shadow_baseline = false;
  double init_scale = 1.0;
};

struct Agent {
  AgentSpec spec;
  Network actor;
  Network critic;
  Network target_actor;
  Network target_critic;
  Adam actor_optimizer;
  Adam critic_optimizer;

  std::vector<double> observe(std::span<const double> x, const std::vector<std::vector<double>>& prev_actions) const;
};

struct ActionSample {
  std::vector<double> raw;      // mean + noise
  std::vector<double> clipped;  // executed action
};

/// Actor mean plus noise, clipped to [-1, 1].
ActionSample sample_action(const Agent& agent, std::span<const double> observation, NoiseProcess& noise);
std::vector<double> select_action(const Agent& agent, std::span<const double> observation, NoiseProcess& noise);

/// Per-sample d/d mu of scale * weight * log N(raw; mu, sigma^2 I), one column
/// per sample. Throws NotApplicableError when sigma is 0.
Eigen::MatrixXd score_function_cotangent(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& mu,
                                         const Eigen::VectorXd& weight, double sigma, double scale);

/// y = r + alpha * F + gamma * Q'(x', a'); the bootstrap term is dropped when done.
double critic_target(double reward, double shadow, double alpha, double gamma, double q_target_next, bool done);

/// One step of an episode as seen by the score-function estimator.
struct EpisodeStep {
  std::vector<double> x;
  std::vector<std::vector<double>> prev_actions;
  std::vector<std::vector<double>> actions;
  std::vector<std::vector<double>> raw_actions;
};
using EpisodeTrace = std::vector<EpisodeStep>;

/// Everything an update needs from a synchronized replay sample.
struct Minibatch {
  std::vector<std::size_t> indices;
  Eigen::MatrixXd critic_inputs;        // [x; a_1..a_N] per column
  Eigen::MatrixXd next_critic_inputs;   // [x'; a'_1..a'_N] from target actors
  std::vector<Eigen::MatrixXd> observations;  // per agent, at x
  Eigen::MatrixXd rewards;              // agents x batch
  Eigen::MatrixXd shadow;               // agents x batch
  Eigen::VectorXd not_done;
  Eigen::VectorXd in_hand;
};

class MultiAgentLearner {
 public:
  MultiAgentLearner(const PlanarHandEnv& env, LearnerConfig config, std::uint64_t seed);

  const LearnerConfig& config() const { return config_; }
  const ObservationLayout& layout() const { return layout_; }
  std::vector<Agent>& agents() { return agents_; }
  const std::vector<Agent>& agents() const { return agents_; }
  int num_agents() const { return static_cast<int>(agents_.size()); }
  ReplayBuffer& buffer() { return buffer_; }

  Minibatch make_minibatch(const std::vector<std::size_t>& indices) const;

  Eigen::VectorXd critic_targets(int agent, const Minibatch& batch, double alpha) const;
  double critic_loss(int agent, const Minibatch& batch, double alpha) const;
  /// d loss / d critic params.
  std::vector<double> critic_loss_gradient(int agent, const Minibatch& batch, double alpha) const;
  /// One optimizer step; returns the loss before the step.
  double update_critic(int agent, const Minibatch& batch, double alpha);

  /// Deterministic policy gradient, ascent direction, batch mean.
  ParamVector actor_gradient(int agent, const Minibatch& batch) const;
  /// Score-function estimate through the Gaussian exploration policy, scaled
  /// by alpha. Throws NotApplicableError when sigma is 0.
  ParamVector shadow_gradient(int agent, const std::vector<EpisodeTrace>& episodes, double alpha,
                              double sigma) const;
  /// Ascent along actor_gradient (+ shadow_gradient when alpha > 0 and
  /// episodes are given).
  void update_actor(int agent, const Minibatch& batch, const std::vector<EpisodeTrace>& episodes, double alpha);

  /// Parameters of the hidden-to-hidden actor layers, the part whose shape is
  /// common to all agents.
  std::vector<double> shared_actor_params(int agent) const;
  void set_shared_actor_params(int agent, const std::vector<double>& values);
  std::vector<double> shared_critic_params(int agent) const;
  void set_shared_critic_params(int agent, const std::vector<double>& values);

  void update_targets(double tau_soft);

 private:
  Eigen::MatrixXd critic_inputs_with(int agent, const Minibatch& batch, const Eigen::MatrixXd& own_actions) const;

  LearnerConfig config_;
  ObservationLayout layout_;
  std::vector<Agent> agents_;
  std::vector<int> action_offset_;
  ReplayBuffer buffer_;
};

}  // namespace fmsr

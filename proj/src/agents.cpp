#include "fmsr/agents.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fmsr/error.hpp"

namespace fmsr {

// ---------------------------------------------------------------------------
// Observations

ObservationLayout::ObservationLayout(const PlanarHandEnv& env) : config_(env.config()), dofs_(env.dofs()) {
  dim_ = kObjectBlock;
  for (int d : dofs_) {
    joint_offset_.push_back(dim_);
    dim_ += 2 * d;
  }
  for (std::size_t i = 0; i < dofs_.size(); ++i) {
    std::vector<int> idx(kObjectBlock);
    for (int k = 0; k < kObjectBlock; ++k) idx[k] = k;
    for (int k = 0; k < 2 * dofs_[i]; ++k) idx.push_back(joint_offset_[i] + k);
    local_indices_.push_back(std::move(idx));
  }
}

std::vector<double> ObservationLayout::global_state(const EnvState& state, const Goal& goal) const {
  FMSR_REQUIRE(state.joint_positions.size() == dofs_.size(), "state does not match the observation layout");
  std::vector<double> x(dim_, 0.0);
  const double e = wrap_angle(goal.target_angle - state.object_angle);
  const Eigen::Vector2d offset = (state.object_center - config_.palm_center) / config_.palm_radius;
  x[0] = std::sin(state.object_angle);
  x[1] = std::cos(state.object_angle);
  x[2] = state.object_angular_velocity / config_.max_angular_velocity;
  x[3] = offset.x();
  x[4] = offset.y();
  x[5] = std::sin(goal.target_angle);
  x[6] = std::cos(goal.target_angle);
  x[7] = std::sin(e);
  x[8] = std::cos(e);
  x[9] = e / kPi;
  x[10] = static_cast<double>(state.contact_count) / config_.max_contacts();
  x[11] = static_cast<double>(state.step_index) / config_.max_episode_steps;
  x[12] = state.object_height_flag == HeightFlag::Fallen ? 1.0 : 0.0;
  const double velocity_scale = config_.time_step / config_.joint_rate_limit;
  for (std::size_t i = 0; i < dofs_.size(); ++i) {
    const int d = dofs_[i];
    FMSR_REQUIRE(static_cast<int>(state.joint_positions[i].size()) == d, "joint vector length mismatch");
    for (int k = 0; k < d; ++k) {
      x[joint_offset_[i] + k] = state.joint_positions[i][k] / config_.joint_limit;
      x[joint_offset_[i] + d + k] = state.joint_velocities[i][k] * velocity_scale;
    }
  }
  return x;
}

int AgentSpec::actor_input_dim() const {
  int n = static_cast<int>(observation_indices.size());
  for (int d : neighbor_action_dims) n += d;
  return n;
}

std::vector<AgentSpec> make_agent_specs(const PlanarHandEnv& env, const ObservationLayout& layout) {
  const auto& roles = env.roles();
  const auto& dofs = env.dofs();
  const int n = env.num_agents();
  const int total_actions = env.config().total_dofs();

  // Neighbor sets in agent-index space.
  std::vector<std::vector<int>> neighbors(n);
  if (n >= 3 && env.config().num_fingers >= 2) {
    const Topology t = build_ring_topology(roles, true);
    auto agent_of = [&](int node) {
      return static_cast<int>(std::find(roles.begin(), roles.end(), t.agents[node]) - roles.begin());
    };
    for (const auto& [a, b] : t.edges) {
      neighbors[agent_of(a)].push_back(agent_of(b));
      neighbors[agent_of(b)].push_back(agent_of(a));
    }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) neighbors[i].push_back(j);
  }

  std::vector<AgentSpec> specs;
  for (int i = 0; i < n; ++i) {
    AgentSpec s;
    s.role = roles[i];
    s.index = i;
    s.action_dim = dofs[i];
    std::sort(neighbors[i].begin(), neighbors[i].end());
    neighbors[i].erase(std::unique(neighbors[i].begin(), neighbors[i].end()), neighbors[i].end());
    s.neighbor_ids = neighbors[i];
    for (int j : s.neighbor_ids) s.neighbor_action_dims.push_back(dofs[j]);
    s.observation_indices = layout.local_indices(i);
    s.global_state_dim = layout.dim();
    s.total_action_dim = total_actions;
    specs.push_back(std::move(s));
  }
  return specs;
}

// ---------------------------------------------------------------------------
// Replay and noise

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t sampling_seed) : capacity_(capacity), rng_(sampling_seed) {
  if (capacity_ < 1) throw ConfigError("replay capacity must be >= 1");
}

void ReplayBuffer::add(TransitionRecord record) {
  if (records_.size() < capacity_) {
    records_.push_back(std::move(record));
    return;
  }
  records_[head_] = std::move(record);
  head_ = (head_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch) {
  FMSR_REQUIRE(!records_.empty(), "cannot sample from an empty replay buffer");
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = static_cast<std::size_t>(rng_.below(records_.size()));
  return idx;
}

std::vector<double> NoiseProcess::sample() {
  std::vector<double> out(sigma_.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = sigma_[k] == 0.0 ? 0.0 : sigma_[k] * rng_.normal();
  return out;
}

// ---------------------------------------------------------------------------
// Agents

std::vector<double> Agent::observe(std::span<const double> x, const std::vector<std::vector<double>>& prev_actions) const {
  FMSR_REQUIRE(static_cast<int>(x.size()) == spec.global_state_dim, "global state has the wrong length");
  std::vector<double> o;
  o.reserve(spec.actor_input_dim());
  for (int i : spec.observation_indices) o.push_back(x[i]);
  for (std::size_t k = 0; k < spec.neighbor_ids.size(); ++k) {
    const auto& a = prev_actions.at(spec.neighbor_ids[k]);
    FMSR_REQUIRE(static_cast<int>(a.size()) == spec.neighbor_action_dims[k], "neighbor action has the wrong length");
    o.insert(o.end(), a.begin(), a.end());
  }
  return o;
}

ActionSample sample_action(const Agent& agent, std::span<const double> observation, NoiseProcess& noise) {
  FMSR_REQUIRE(static_cast<int>(observation.size()) == agent.spec.actor_input_dim(), "observation has the wrong length");
  FMSR_REQUIRE(static_cast<int>(noise.sigma().size()) == agent.spec.action_dim, "noise dimension mismatch");
  ActionSample s;
  s.raw = agent.actor.forward(observation);
  const auto eps = noise.sample();
  s.clipped.resize(s.raw.size());
  for (std::size_t k = 0; k < s.raw.size(); ++k) {
    s.raw[k] += eps[k];
    s.clipped[k] = std::clamp(s.raw[k], -1.0, 1.0);
  }
  return s;
}

std::vector<double> select_action(const Agent& agent, std::span<const double> observation, NoiseProcess& noise) {
  return sample_action(agent, observation, noise).clipped;
}

Eigen::MatrixXd score_function_cotangent(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& mu,
                                         const Eigen::VectorXd& weight, double sigma, double scale) {
  FMSR_REQUIRE(raw.rows() == mu.rows() && raw.cols() == mu.cols() && weight.size() == raw.cols(),
               "score-function shapes disagree");
  if (!(sigma > 0.0)) throw NotApplicableError("the score-function gradient needs a stochastic policy (sigma > 0)");
  // d/d mu log N(raw; mu, sigma^2) = (raw - mu) / sigma^2
  return ((raw - mu) / (sigma * sigma)) * (weight * scale).asDiagonal();
}

double critic_target(double reward, double shadow, double alpha, double gamma, double q_target_next, bool done) {
  double y = reward + alpha * shadow;
  if (!done) y += gamma * q_target_next;
  return y;
}

// ---------------------------------------------------------------------------
// Learner

namespace {

Network make_net(std::vector<int> sizes, Activation output, std::uint64_t seed, double scale) {
  NetworkSpec spec;
  spec.layer_sizes = std::move(sizes);
  spec.hidden_activation = Activation::ReLU;
  spec.output_activation = output;
  spec.init_seed = seed;
  spec.init_scale = scale;
  return Network(spec);
}

// Contiguous parameter range of the hidden-to-hidden layers.
std::pair<std::size_t, std::size_t> middle_range(const ParamLayout& layout) {
  const auto& layers = layout.layers;
  if (layers.size() < 3) return {0, 0};
  const auto& last_middle = layers[layers.size() - 2];
  return {layers[1].weight_offset, last_middle.bias_offset + last_middle.outputs};
}

}  // namespace

MultiAgentLearner::MultiAgentLearner(const PlanarHandEnv& env, LearnerConfig config, std::uint64_t seed)
    : config_(std::move(config)), layout_(env), buffer_(config_.replay_capacity, mix_seed(seed, 0xB0FFE7)) {
  if (config_.hidden_layers.empty()) throw ConfigError("networks need at least one hidden layer");
  if (!(config_.gamma >= 0.0 && config_.gamma < 1.0)) throw ConfigError("gamma must be in [0, 1)");
  if (config_.exploration_sigma < 0.0) throw ConfigError("exploration_sigma must be >= 0");
  if (config_.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  const auto specs = make_agent_specs(env, layout_);
  int offset = layout_.dim();
  for (const auto& s : specs) {
    action_offset_.push_back(offset);
    offset += s.action_dim;

    std::vector<int> actor_sizes{s.actor_input_dim()};
    std::vector<int> critic_sizes{s.critic_input_dim()};
    for (int h : config_.hidden_layers) {
      actor_sizes.push_back(h);
      critic_sizes.push_back(h);
    }
    actor_sizes.push_back(s.action_dim);
    critic_sizes.push_back(1);
    const std::uint64_t base = mix_seed(seed, static_cast<std::uint64_t>(s.index));
    Network actor = make_net(actor_sizes, Activation::Tanh, mix_seed(base, 1), config_.init_scale);
    Network critic = make_net(critic_sizes, Activation::Identity, mix_seed(base, 2), config_.init_scale);
    const std::size_t actor_size = actor.layout().size;
    const std::size_t critic_size = critic.layout().size;
    agents_.push_back(Agent{s, actor, critic, actor, critic, Adam(actor_size, config_.actor_learning_rate),
                            Adam(critic_size, config_.critic_learning_rate)});
  }
}

Minibatch MultiAgentLearner::make_minibatch(const std::vector<std::size_t>& indices) const {
  FMSR_REQUIRE(!indices.empty(), "empty minibatch");
  const int n = num_agents();
  const auto b = static_cast<Eigen::Index>(indices.size());
  const int critic_rows = agents_.front().spec.critic_input_dim();
  Minibatch mb;
  mb.indices = indices;
  mb.critic_inputs.resize(critic_rows, b);
  mb.next_critic_inputs.resize(critic_rows, b);
  mb.rewards.resize(n, b);
  mb.shadow.resize(n, b);
  mb.not_done.resize(b);
  mb.in_hand.resize(b);
  std::vector<Eigen::MatrixXd> next_obs(n);
  for (int i = 0; i < n; ++i) {
    mb.observations.emplace_back(agents_[i].spec.actor_input_dim(), b);
    next_obs[i].resize(agents_[i].spec.actor_input_dim(), b);
  }

  const int xd = layout_.dim();
  for (Eigen::Index c = 0; c < b; ++c) {
    const TransitionRecord& r = buffer_.at(indices[c]);
    for (int k = 0; k < xd; ++k) {
      mb.critic_inputs(k, c) = r.x[k];
      mb.next_critic_inputs(k, c) = r.x_next[k];
    }
    for (int i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < r.actions[i].size(); ++k) mb.critic_inputs(action_offset_[i] + k, c) = r.actions[i][k];
      const auto o = agents_[i].observe(r.x, r.prev_actions);
      const auto o_next = agents_[i].observe(r.x_next, r.actions);
      mb.observations[i].col(c) = Eigen::Map<const Eigen::VectorXd>(o.data(), static_cast<Eigen::Index>(o.size()));
      next_obs[i].col(c) = Eigen::Map<const Eigen::VectorXd>(o_next.data(), static_cast<Eigen::Index>(o_next.size()));
      mb.rewards(i, c) = r.rewards[i];
      mb.shadow(i, c) = r.shadow[i];
    }
    mb.not_done(c) = r.done ? 0.0 : 1.0;
    mb.in_hand(c) = r.in_hand ? 1.0 : 0.0;
  }
  for (int i = 0; i < n; ++i)
    mb.next_critic_inputs.middleRows(action_offset_[i], agents_[i].spec.action_dim) =
        agents_[i].target_actor.forward_batch(next_obs[i]);
  return mb;
}

Eigen::VectorXd MultiAgentLearner::critic_targets(int agent, const Minibatch& batch, double alpha) const {
  const Eigen::MatrixXd q_next = agents_.at(agent).target_critic.forward_batch(batch.next_critic_inputs);
  Eigen::VectorXd y(q_next.cols());
  for (Eigen::Index c = 0; c < y.size(); ++c)
    y(c) = critic_target(batch.rewards(agent, c), batch.shadow(agent, c), alpha, config_.gamma, q_next(0, c),
                         batch.not_done(c) == 0.0);
  return y;
}

double MultiAgentLearner::critic_loss(int agent, const Minibatch& batch, double alpha) const {
  const Eigen::VectorXd y = critic_targets(agent, batch, alpha);
  const Eigen::VectorXd q = agents_.at(agent).critic.forward_batch(batch.critic_inputs).row(0).transpose();
  return (q - y).squaredNorm() / static_cast<double>(y.size());
}

std::vector<double> MultiAgentLearner::critic_loss_gradient(int agent, const Minibatch& batch, double alpha) const {
  const Eigen::VectorXd y = critic_targets(agent, batch, alpha);
  const Network& critic = agents_.at(agent).critic;
  const Eigen::MatrixXd q = critic.forward_batch(batch.critic_inputs);
  const Eigen::MatrixXd cot = 2.0 * (q - y.transpose()) / static_cast<double>(y.size());
  return critic.gradient_batch(batch.critic_inputs, cot).params;
}

double MultiAgentLearner::update_critic(int agent, const Minibatch& batch, double alpha) {
  FMSR_REQUIRE(batch.critic_inputs.cols() > 0, "empty minibatch");
  const double loss = critic_loss(agent, batch, alpha);
  const auto grad = critic_loss_gradient(agent, batch, alpha);
  Agent& a = agents_.at(agent);
  a.critic_optimizer.descend(a.critic.params(), grad);
  return loss;
}

Eigen::MatrixXd MultiAgentLearner::critic_inputs_with(int agent, const Minibatch& batch,
                                                      const Eigen::MatrixXd& own_actions) const {
  Eigen::MatrixXd in = batch.critic_inputs;
  in.middleRows(action_offset_[agent], agents_[agent].spec.action_dim) = own_actions;
  return in;
}

ParamVector MultiAgentLearner::actor_gradient(int agent, const Minibatch& batch) const {
  const Agent& a = agents_.at(agent);
  const Eigen::MatrixXd& obs = batch.observations.at(agent);
  const auto b = obs.cols();
  const Eigen::MatrixXd mu = a.actor.forward_batch(obs);
  const Eigen::MatrixXd in = critic_inputs_with(agent, batch, mu);
  const auto critic_grad = a.critic.gradient_batch(in, Eigen::MatrixXd::Constant(1, b, 1.0 / static_cast<double>(b)));
  const Eigen::MatrixXd dq_da = critic_grad.inputs.middleRows(action_offset_[agent], a.spec.action_dim);
  return {a.actor.gradient_batch(obs, dq_da).params, a.actor.layout()};
}

ParamVector MultiAgentLearner::shadow_gradient(int agent, const std::vector<EpisodeTrace>& episodes, double alpha,
                                               double sigma) const {
  const Agent& a = agents_.at(agent);
  ParamVector out{std::vector<double>(a.actor.layout().size, 0.0), a.actor.layout()};
  if (alpha == 0.0 || episodes.empty()) return out;
  if (!(sigma > 0.0)) throw NotApplicableError("the score-function gradient needs a stochastic policy (sigma > 0)");

  std::size_t steps = 0;
  for (const auto& ep : episodes) steps += ep.size();
  if (steps == 0) return out;

  const int xd = layout_.dim();
  const auto s = static_cast<Eigen::Index>(steps);
  Eigen::MatrixXd obs(a.spec.actor_input_dim(), s);
  Eigen::MatrixXd critic_in(a.spec.critic_input_dim(), s);
  Eigen::MatrixXd raw(a.spec.action_dim, s);
  Eigen::VectorXd discount(s);
  Eigen::Index c = 0;
  for (const auto& ep : episodes) {
    double g = 1.0;
    for (const auto& step : ep) {
      const auto o = a.observe(step.x, step.prev_actions);
      obs.col(c) = Eigen::Map<const Eigen::VectorXd>(o.data(), static_cast<Eigen::Index>(o.size()));
      for (int k = 0; k < xd; ++k) critic_in(k, c) = step.x[k];
      for (int i = 0; i < num_agents(); ++i)
        for (std::size_t k = 0; k < step.actions[i].size(); ++k) critic_in(action_offset_[i] + k, c) = step.actions[i][k];
      for (int k = 0; k < a.spec.action_dim; ++k) raw(k, c) = step.raw_actions[agent][k];
      discount(c) = g;
      g *= config_.gamma;
      ++c;
    }
  }

  Eigen::VectorXd q = a.critic.forward_batch(critic_in).row(0).transpose();
  if (config_.shadow_baseline) q.array() -= q.mean();
  const Eigen::MatrixXd mu = a.actor.forward_batch(obs);
  const Eigen::MatrixXd cot = score_function_cotangent(raw, mu, discount.cwiseProduct(q), sigma,
                                                       alpha / static_cast<double>(episodes.size()));
  out.values = a.actor.gradient_batch(obs, cot).params;
  return out;
}

void MultiAgentLearner::update_actor(int agent, const Minibatch& batch, const std::vector<EpisodeTrace>& episodes,
                                     double alpha) {
  ParamVector g = actor_gradient(agent, batch);
  if (alpha != 0.0 && !episodes.empty()) {
    const ParamVector sg = shadow_gradient(agent, episodes, alpha, config_.exploration_sigma);
    for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] += sg.values[k];
  }
  for (double& v : g.values) v = -v;  // ascent
  Agent& a = agents_.at(agent);
  a.actor_optimizer.descend(a.actor.params(), g.values);
}

std::vector<double> MultiAgentLearner::shared_actor_params(int agent) const {
  const auto& p = agents_.at(agent).actor.params();
  const auto [begin, end] = middle_range(agents_[agent].actor.layout());
  return {p.begin() + static_cast<std::ptrdiff_t>(begin), p.begin() + static_cast<std::ptrdiff_t>(end)};
}

void MultiAgentLearner::set_shared_actor_params(int agent, const std::vector<double>& values) {
  auto& p = agents_.at(agent).actor.params();
  const auto [begin, end] = middle_range(agents_[agent].actor.layout());
  FMSR_REQUIRE(values.size() == end - begin, "shared actor parameter length mismatch");
  std::copy(values.begin(), values.end(), p.begin() + static_cast<std::ptrdiff_t>(begin));
}

std::vector<double> MultiAgentLearner::shared_critic_params(int agent) const {
  const auto& p = agents_.at(agent).critic.params();
  const auto [begin, end] = middle_range(agents_[agent].critic.layout());
  return {p.begin() + static_cast<std::ptrdiff_t>(begin), p.begin() + static_cast<std::ptrdiff_t>(end)};
}

void MultiAgentLearner::set_shared_critic_params(int agent, const std::vector<double>& values) {
  auto& p = agents_.at(agent).critic.params();
  const auto [begin, end] = middle_range(agents_[agent].critic.layout());
  FMSR_REQUIRE(values.size() == end - begin, "shared critic parameter length mismatch");
  std::copy(values.begin(), values.end(), p.begin() + static_cast<std::ptrdiff_t>(begin));
}

void MultiAgentLearner::update_targets(double tau_soft) {
  for (Agent& a : agents_) {
    a.target_actor.set_params(soft_update(a.target_actor.get_params(), a.actor.get_params(), tau_soft));
    a.target_critic.set_params(soft_update(a.target_critic.get_params(), a.critic.get_params(), tau_soft));
  }
}

}  // namespace fmsr

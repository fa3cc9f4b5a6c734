#pragma once

// Task reward, the two occupancy-based stability terms, and the per-finger
// reward compositions.

#include <Eigen/Core>

#include <set>
#include <string_view>

#include "fmsr/occupancy.hpp"
#include "fmsr/planar_hand_env.hpp"

namespace fmsr {

enum class RewardComponent { Task, SafeRegion, Contact };

struct SafeRegionSpec {
  Eigen::Vector2d palm_center{0.0, 0.0};
  double radius = 0.0175;  // 0.35 x default palm radius
};

struct RewardWeights {
  double alpha = 0.1;
  double log_offset = 0.1;
  int contact_threshold = 10;
  /// Evaluate the stability terms on the printed (good) sets instead of the
  /// bad sets.
  bool literal_sign_mode = false;

  void validate() const;
};

struct AgentRewardProfile {
  AgentRole agent = AgentRole::Wrist;
  std::set<RewardComponent> components;

  bool has(RewardComponent c) const { return components.contains(c); }
};

/// Wrist: all three; thumb and little: task + safe region; index, middle and
/// ring: task + contact.
AgentRewardProfile default_profile(AgentRole role);

/// -|wrap(z_t - z_g)|.
double task_reward(double object_angle, double goal_angle);

/// -log(mass outside the safe region + offset) by default.
double safe_region_reward(const OccupancyTable& table, const SafeRegionSpec& region, const RewardWeights& weights);

/// -log(mass with fewer than contact_threshold contacts + offset) by default.
double contact_reward(const OccupancyTable& table, const RewardWeights& weights);

/// Both stability terms as functions of the relevant (normalized) mass.
double shadow_log_term(double mass, double log_offset);

double compose(const AgentRewardProfile& profile, double r1, double r2, double r3);

/// gamma^t * r_task + alpha * f_shadow.
double total_reward(double r_task, double f_shadow, const RewardWeights& weights, double gamma_t);

/// 0 on success, -1 otherwise.
double sparse_reward(const EnvState& state, const Goal& goal, double threshold);

}  // namespace fmsr

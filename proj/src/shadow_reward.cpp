#include "fmsr/shadow_reward.hpp"

#include <cmath>

#include "fmsr/error.hpp"

namespace fmsr {

void RewardWeights::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(log_offset > 0.0)) throw ConfigError("log_offset must be > 0");
  if (contact_threshold < 0) throw ConfigError("contact threshold must be >= 0");
}

AgentRewardProfile default_profile(AgentRole role) {
  using C = RewardComponent;
  switch (role) {
    case AgentRole::Wrist: return {role, {C::Task, C::SafeRegion, C::Contact}};
    case AgentRole::Thumb:
    case AgentRole::Little: return {role, {C::Task, C::SafeRegion}};
    case AgentRole::Index:
    case AgentRole::Middle:
    case AgentRole::Ring: return {role, {C::Task, C::Contact}};
  }
  return {role, {C::Task}};
}

double task_reward(double object_angle, double goal_angle) {
  return -std::abs(wrap_angle(object_angle - goal_angle));
}

double shadow_log_term(double mass, double log_offset) { return -std::log(mass + log_offset); }

double safe_region_reward(const OccupancyTable& table, const SafeRegionSpec& region, const RewardWeights& weights) {
  const int axis = table.spec().axis_of(Feature::ObjectOffset);
  FMSR_REQUIRE(axis >= 0, "occupancy binning has no object offset feature");
  FMSR_REQUIRE(region.radius > 0.0, "safe region radius must be positive");
  // The offset feature is already measured from the palm center.
  const double rho = region.radius;
  const double mass = weights.literal_sign_mode
                          ? table.mass_of([&](std::span<const double> rep) { return rep[axis] < rho; })
                          : table.mass_of([&](std::span<const double> rep) { return rep[axis] >= rho; });
  return shadow_log_term(mass, weights.log_offset);
}

double contact_reward(const OccupancyTable& table, const RewardWeights& weights) {
  const int axis = table.spec().axis_of(Feature::ContactCount);
  FMSR_REQUIRE(axis >= 0, "occupancy binning has no contact count feature");
  const double tau = weights.contact_threshold;
  const double mass = weights.literal_sign_mode
                          ? table.weighted_sum([&](std::span<const double> rep) { return rep[axis] > tau; })
                          : table.weighted_sum([&](std::span<const double> rep) { return rep[axis] < tau; });
  return shadow_log_term(mass, weights.log_offset);
}

double compose(const AgentRewardProfile& profile, double r1, double r2, double r3) {
  double sum = 0.0;
  if (profile.has(RewardComponent::Task)) sum += r1;
  if (profile.has(RewardComponent::SafeRegion)) sum += r2;
  if (profile.has(RewardComponent::Contact)) sum += r3;
  return sum;
}

double total_reward(double r_task, double f_shadow, const RewardWeights& weights, double gamma_t) {
  return gamma_t * r_task + weights.alpha * f_shadow;
}

double sparse_reward(const EnvState& state, const Goal& goal, double threshold) {
  return is_success(state, goal, threshold) ? 0.0 : -1.0;
}

}  // namespace fmsr

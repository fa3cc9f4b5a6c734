#include "fmsr/planar_hand_env.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "fmsr/error.hpp"
#include "fmsr/rng.hpp"

namespace fmsr {

namespace {

constexpr int kHandParts = 6;
constexpr int kSettleIterations = 6;

const AgentRole kHandOrder[kHandParts] = {AgentRole::Wrist,  AgentRole::Thumb, AgentRole::Index,
                                          AgentRole::Middle, AgentRole::Ring,  AgentRole::Little};

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

double mean_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += v[i];
  return s / static_cast<double>(end - begin);
}

}  // namespace

double wrap_angle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

std::string_view to_string(ObjectShape shape) { return shape == ObjectShape::Block ? "block" : "egg"; }

std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::Wrist: return "wrist";
    case AgentRole::Thumb: return "thumb";
    case AgentRole::Index: return "index";
    case AgentRole::Middle: return "middle";
    case AgentRole::Ring: return "ring";
    case AgentRole::Little: return "little";
  }
  return "?";
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Success: return "success";
    case Outcome::Incomplete: return "incomplete";
    case Outcome::Drop: return "drop";
  }
  return "?";
}

ObjectShape object_shape_from_string(std::string_view name) {
  if (name == "block" || name == "Block") return ObjectShape::Block;
  if (name == "egg" || name == "Egg") return ObjectShape::Egg;
  throw ConfigError("unknown object shape: " + std::string(name));
}

AgentRole agent_role_from_string(std::string_view name) {
  for (AgentRole r : kHandOrder)
    if (to_string(r) == name) return r;
  throw ConfigError("unknown agent role: " + std::string(name));
}

// ---------------------------------------------------------------------------
// EnvConfig

std::vector<AgentRole> EnvConfig::agent_roles() const {
  std::vector<AgentRole> roles;
  if (wrist_enabled) roles.push_back(AgentRole::Wrist);
  for (int f = 0; f < num_fingers; ++f) roles.push_back(kHandOrder[1 + f]);
  return roles;
}

std::vector<int> EnvConfig::agent_dofs() const {
  const int agents = finger_count_with_wrist();
  if (static_cast<int>(dofs_per_agent.size()) == agents) return dofs_per_agent;
  if (dofs_per_agent.size() != kHandParts)
    throw ConfigError("dofs_per_agent must list 6 hand parts or one entry per active agent");
  std::vector<int> out;
  if (wrist_enabled) out.push_back(dofs_per_agent[0]);
  for (int f = 0; f < num_fingers; ++f) out.push_back(dofs_per_agent[1 + f]);
  return out;
}

int EnvConfig::total_dofs() const {
  auto d = agent_dofs();
  return std::accumulate(d.begin(), d.end(), 0);
}

double EnvConfig::object_radius() const {
  return object_shape == ObjectShape::Block ? block_radius : egg_radius;
}

void EnvConfig::validate() const {
  if (num_fingers < 1 || num_fingers > 5) throw ConfigError("num_fingers must be in [1, 5]");
  if (!(time_step > 0.0)) throw ConfigError("time_step must be positive");
  if (sensor_count <= 0) throw ConfigError("sensor_count must be positive");
  if (!(palm_radius > 0.0)) throw ConfigError("palm_radius must be positive");
  if (max_episode_steps < 1) throw ConfigError("max_episode_steps must be >= 1");
  if (drop_grace_steps < 0) throw ConfigError("drop_grace_steps must be >= 0");
  if (friction_coefficient < 0.0) throw ConfigError("friction_coefficient must be >= 0");
  if (contact_points_per_finger < 1) throw ConfigError("contact_points_per_finger must be >= 1");
  if (sensor_count / num_fingers < contact_points_per_finger)
    throw ConfigError("sensor_count too small: every contact point needs its own tactile cell");
  if (!(joint_rate_limit > 0.0) || !(joint_limit > 0.0)) throw ConfigError("joint limits must be positive");
  if (!(proximal_length > 0.0) || !(distal_length > 0.0) || !(finger_base_radius > 0.0))
    throw ConfigError("finger lengths must be positive");
  if (!(block_radius > 0.0) || !(egg_radius > 0.0)) throw ConfigError("object radius must be positive");
  if (object_radius() >= finger_base_radius) throw ConfigError("object does not fit inside the finger bases");
  if (!(contact_stiffness > 0.0) || !(force_saturation > 0.0) || !(object_inertia > 0.0))
    throw ConfigError("contact constants must be positive");
  if (initial_penetration < 0.0 || initial_offset < 0.0 || egg_noise < 0.0 || tilt_gain < 0.0)
    throw ConfigError("negative perturbation magnitudes");
  for (int d : agent_dofs())
    if (d < 1) throw ConfigError("every agent needs at least one degree of freedom");
}

// ---------------------------------------------------------------------------
// PlanarHandEnv

PlanarHandEnv::PlanarHandEnv(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  roles_ = config_.agent_roles();
  dofs_ = config_.agent_dofs();
  sensors_per_finger_ = config_.sensor_count / config_.num_fingers;
  for (int f = 0; f < config_.num_fingers; ++f)
    finger_base_angle_.push_back(kPi / 2.0 + 2.0 * kPi * f / config_.num_fingers);
  for (int f = 0; f < config_.num_fingers; ++f) initial_bend_.push_back(solve_initial_bend(f));
}

PlanarHandEnv::Angles PlanarHandEnv::finger_angles(const std::vector<double>& joints) const {
  const std::size_t d = joints.size();
  const std::size_t split = (d + 1) / 2;
  Angles a{mean_of(joints, 0, split), 0.0};
  a.bend = split < d ? mean_of(joints, split, d) : std::numeric_limits<double>::quiet_NaN();
  return a;
}

std::vector<Eigen::Vector2d> PlanarHandEnv::points_from_angles(int finger, Angles angles) const {
  if (std::isnan(angles.bend)) angles.bend = initial_bend_.empty() ? 0.0 : initial_bend_[finger];
  // The swing joint carries the finger base around the palm center; the
  // flexion chain is aimed so that the base-to-tip line stays radial, which
  // makes bend a pure reach control.
  const double phi = finger_base_angle_[finger] + angles.swing;
  const Eigen::Vector2d base = config_.palm_center + config_.finger_base_radius * Eigen::Vector2d(std::cos(phi), std::sin(phi));
  const double aim = std::atan2(config_.distal_length * std::sin(angles.bend),
                                config_.proximal_length + config_.distal_length * std::cos(angles.bend));
  const double psi1 = phi + kPi - aim;
  const Eigen::Vector2d knuckle = base + config_.proximal_length * Eigen::Vector2d(std::cos(psi1), std::sin(psi1));
  const double psi2 = psi1 + angles.bend;
  const Eigen::Vector2d dir(std::cos(psi2), std::sin(psi2));
  const int n = config_.contact_points_per_finger;
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(n);
  for (int j = 1; j <= n; ++j) pts.push_back(knuckle + config_.distal_length * (static_cast<double>(j) / n) * dir);
  return pts;
}

std::vector<Eigen::Vector2d> PlanarHandEnv::finger_points(const EnvState& state, int finger) const {
  return points_from_angles(finger, finger_angles(state.joint_positions[finger_agent(finger)]));
}

double PlanarHandEnv::solve_initial_bend(int finger) const {
  const double target = config_.object_radius() - config_.initial_penetration;
  auto closest = [&](double bend) {
    auto pts = points_from_angles(finger, Angles{0.0, bend});
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) best = std::min(best, (p - config_.palm_center).norm());
    return best;
  };
  double lo = 0.0, hi = config_.joint_limit;
  if (closest(lo) > target) return 0.0;
  if (closest(hi) < target) throw ConfigError("fingers cannot retract clear of the object within joint_limit");
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (closest(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ContactReport PlanarHandEnv::contacts_at(const std::vector<std::vector<Eigen::Vector2d>>& points,
                                         const Eigen::Vector2d& center) const {
  ContactReport report;
  report.sensor_activations.assign(config_.sensor_count, false);
  const double radius = config_.object_radius();
  const int per_finger = config_.contact_points_per_finger;
  for (int f = 0; f < static_cast<int>(points.size()); ++f) {
    for (int j = 0; j < per_finger; ++j) {
      const Eigen::Vector2d& p = points[f][j];
      const Eigen::Vector2d to_center = center - p;
      const double dist = to_center.norm();
      if (dist >= radius) continue;
      Contact c;
      c.position = p;
      c.unit_normal = dist > 1e-12 ? Eigen::Vector2d(to_center / dist)
                                   : Eigen::Vector2d(-std::cos(finger_base_angle_[f]), -std::sin(finger_base_angle_[f]));
      c.normal_force = config_.contact_stiffness * (radius - dist);
      c.finger = f;
      c.sensor = f * sensors_per_finger_ + (j * sensors_per_finger_) / per_finger;
      if (c.normal_force > config_.activation_threshold) {
        report.sensor_activations[c.sensor] = true;
        ++report.contact_count;
      }
      report.contacts.push_back(c);
    }
  }
  return report;
}

Eigen::Vector2d PlanarHandEnv::settle(const std::vector<std::vector<Eigen::Vector2d>>& points,
                                      Eigen::Vector2d center) const {
  const double radius = config_.object_radius();
  for (int it = 0; it < kSettleIterations; ++it) {
    Eigen::Vector2d force = Eigen::Vector2d::Zero();
    int n = 0;
    for (const auto& finger : points) {
      for (const auto& p : finger) {
        const Eigen::Vector2d d = center - p;
        const double dist = d.norm();
        if (dist >= radius || dist < 1e-12) continue;
        force += config_.contact_stiffness * (radius - dist) * d / dist;
        ++n;
      }
    }
    if (n == 0) break;
    center += force / (config_.contact_stiffness * (n + 1));
  }
  return center;
}

std::pair<EnvState, Goal> PlanarHandEnv::reset(std::uint64_t seed) const {
  SplitMix64 rng(seed);

  EnvState s;
  s.episode_seed = seed;
  s.object_angle = wrap_angle(rng.uniform(-kPi, kPi));
  Goal g{wrap_angle(rng.uniform(-kPi, kPi))};
  const double r = config_.initial_offset * std::sqrt(rng.uniform());
  const double a = rng.uniform(-kPi, kPi);
  s.object_center = config_.palm_center + r * Eigen::Vector2d(std::cos(a), std::sin(a));

  for (int i = 0; i < num_agents(); ++i) {
    std::vector<double> q(dofs_[i], 0.0);
    if (roles_[i] != AgentRole::Wrist) {
      const int finger = i - (config_.wrist_enabled ? 1 : 0);
      const std::size_t split = (q.size() + 1) / 2;
      for (std::size_t j = 0; j < q.size(); ++j)
        q[j] = (j < split ? 0.0 : initial_bend_[finger]) + rng.uniform(-0.05, 0.05);
    }
    s.joint_positions.push_back(q);
    s.joint_velocities.emplace_back(dofs_[i], 0.0);
  }

  std::vector<std::vector<Eigen::Vector2d>> pts;
  for (int f = 0; f < config_.num_fingers; ++f) pts.push_back(finger_points(s, f));
  s.object_center = settle(pts, s.object_center);
  s.contact_count = contacts_at(pts, s.object_center).contact_count;
  return {s, g};
}

ContactReport PlanarHandEnv::contacts(const EnvState& state) const {
  std::vector<std::vector<Eigen::Vector2d>> pts;
  for (int f = 0; f < config_.num_fingers; ++f) pts.push_back(finger_points(state, f));
  return contacts_at(pts, state.object_center);
}

bool PlanarHandEnv::terminated(const EnvState& state) const {
  return state.object_height_flag == HeightFlag::Fallen || state.step_index >= config_.max_episode_steps;
}

StepResult PlanarHandEnv::step(const EnvState& state, const std::vector<std::vector<double>>& actions) const {
  FMSR_REQUIRE(static_cast<int>(actions.size()) == num_agents(), "one action vector per agent expected");
  for (int i = 0; i < num_agents(); ++i)
    FMSR_REQUIRE(static_cast<int>(actions[i].size()) == dofs_[i],
                 "action length for " + std::string(to_string(roles_[i])) + " must equal its DoF count");
  FMSR_REQUIRE(static_cast<int>(state.joint_positions.size()) == num_agents(), "state does not match config");

  StepResult out;
  EnvState& s = out.state;
  s = state;
  s.step_index = state.step_index + 1;

  if (state.object_height_flag == HeightFlag::Fallen) {
    for (auto& v : s.joint_velocities) std::fill(v.begin(), v.end(), 0.0);
    s.object_angular_velocity = 0.0;
    out.report = contacts(s);
    s.contact_count = out.report.contact_count;
    out.terminated = true;
    return out;
  }

  const double dt = config_.time_step;
  for (int i = 0; i < num_agents(); ++i) {
    for (int j = 0; j < dofs_[i]; ++j) {
      const double a = std::clamp(actions[i][j], -1.0, 1.0);
      const double q0 = state.joint_positions[i][j];
      const double q1 = std::clamp(q0 + a * config_.joint_rate_limit, -config_.joint_limit, config_.joint_limit);
      s.joint_positions[i][j] = q1;
      s.joint_velocities[i][j] = (q1 - q0) / dt;
    }
  }

  std::vector<std::vector<Eigen::Vector2d>> before, after;
  for (int f = 0; f < config_.num_fingers; ++f) {
    before.push_back(finger_points(state, f));
    after.push_back(finger_points(s, f));
  }

  Eigen::Vector2d center = state.object_center;
  if (config_.wrist_enabled) {
    const auto& w = s.joint_positions[0];
    double tx = 0.0, ty = 0.0;
    int nx = 0, ny = 0;
    for (std::size_t j = 0; j < w.size(); ++j) (j % 2 == 0 ? (tx += w[j], ++nx) : (ty += w[j], ++ny));
    if (nx) tx /= nx;
    if (ny) ty /= ny;
    center += config_.tilt_gain * dt * Eigen::Vector2d(std::sin(tx), std::sin(ty));
  }
  if (config_.object_shape == ObjectShape::Egg && config_.egg_noise > 0.0) {
    SplitMix64 noise(mix_seed(state.episode_seed, static_cast<std::uint64_t>(s.step_index)));
    center += config_.egg_noise * Eigen::Vector2d(noise.normal(), noise.normal());
  }
  center = settle(after, center);
  s.object_center = center;

  out.report = contacts_at(after, center);
  s.contact_count = out.report.contact_count;

  const double radius = config_.object_radius();
  const int per_finger = config_.contact_points_per_finger;
  double transmitted = 0.0;
  for (int f = 0; f < config_.num_fingers; ++f) {
    for (int j = 0; j < per_finger; ++j) {
      const Eigen::Vector2d& p = after[f][j];
      const Eigen::Vector2d r = p - center;
      const double dist = r.norm();
      if (dist >= radius || dist < 1e-12) continue;
      const double force = config_.contact_stiffness * (radius - dist);
      if (force <= config_.activation_threshold) continue;
      const Eigen::Vector2d v = (p - before[f][j]) / dt;
      const double tangential = cross2(r, v) / dist;
      transmitted += std::min(1.0, force / config_.force_saturation) * tangential;
    }
  }
  double omega = config_.friction_coefficient * transmitted / (config_.object_inertia * radius);
  omega = std::clamp(omega, -config_.max_angular_velocity, config_.max_angular_velocity);
  s.object_angular_velocity = omega;
  s.object_angle = wrap_angle(state.object_angle + omega * dt);

  s.low_contact_steps = s.contact_count < 2 ? state.low_contact_steps + 1 : 0;
  const bool off_palm = (center - config_.palm_center).norm() > config_.palm_radius;
  if (s.low_contact_steps > config_.drop_grace_steps || off_palm) s.object_height_flag = HeightFlag::Fallen;

  out.terminated = terminated(s);
  return out;
}

bool is_success(const EnvState& state, const Goal& goal, double threshold) {
  FMSR_REQUIRE(threshold > 0.0, "success threshold must be positive");
  return std::abs(wrap_angle(state.object_angle - goal.target_angle)) < threshold;
}

Outcome classify_outcome(const Trajectory& trajectory, const Goal& goal, double test_threshold) {
  FMSR_REQUIRE(!trajectory.empty(), "cannot classify an empty trajectory");
  bool fell = false;
  for (const auto& step : trajectory) {
    if (is_success(step.state, goal, test_threshold)) return Outcome::Success;
    fell = fell || step.state.object_height_flag == HeightFlag::Fallen;
  }
  return fell ? Outcome::Drop : Outcome::Incomplete;
}

// ---------------------------------------------------------------------------
// Trajectory records

namespace {

nlohmann::json vec2(const Eigen::Vector2d& v) { return nlohmann::json::array({v.x(), v.y()}); }
Eigen::Vector2d vec2(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

void write_trajectory(std::ostream& out, const Trajectory& trajectory, const Goal& goal) {
  for (const auto& step : trajectory) {
    const EnvState& s = step.state;
    nlohmann::json j;
    j["goal"] = goal.target_angle;
    j["step"] = s.step_index;
    j["angle"] = s.object_angle;
    j["angular_velocity"] = s.object_angular_velocity;
    j["center"] = vec2(s.object_center);
    j["fallen"] = s.object_height_flag == HeightFlag::Fallen;
    j["contact_count"] = s.contact_count;
    j["low_contact_steps"] = s.low_contact_steps;
    j["seed"] = s.episode_seed;
    j["joint_positions"] = s.joint_positions;
    j["joint_velocities"] = s.joint_velocities;
    auto contacts = nlohmann::json::array();
    for (const auto& c : step.report.contacts)
      contacts.push_back({{"position", vec2(c.position)},
                          {"normal", vec2(c.unit_normal)},
                          {"force", c.normal_force},
                          {"finger", c.finger},
                          {"sensor", c.sensor}});
    j["contacts"] = contacts;
    std::vector<int> active;
    for (std::size_t k = 0; k < step.report.sensor_activations.size(); ++k)
      if (step.report.sensor_activations[k]) active.push_back(static_cast<int>(k));
    j["sensor_count"] = step.report.sensor_activations.size();
    j["active_sensors"] = active;
    j["report_contact_count"] = step.report.contact_count;
    out << j.dump() << '\n';
  }
}

std::pair<Trajectory, Goal> read_trajectory(std::istream& in) {
  Trajectory traj;
  Goal goal;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    goal.target_angle = j.at("goal").get<double>();
    TrajectoryStep step;
    EnvState& s = step.state;
    s.step_index = j.at("step").get<int>();
    s.object_angle = j.at("angle").get<double>();
    s.object_angular_velocity = j.at("angular_velocity").get<double>();
    s.object_center = vec2(j.at("center"));
    s.object_height_flag = j.at("fallen").get<bool>() ? HeightFlag::Fallen : HeightFlag::OnPalm;
    s.contact_count = j.at("contact_count").get<int>();
    s.low_contact_steps = j.at("low_contact_steps").get<int>();
    s.episode_seed = j.at("seed").get<std::uint64_t>();
    s.joint_positions = j.at("joint_positions").get<std::vector<std::vector<double>>>();
    s.joint_velocities = j.at("joint_velocities").get<std::vector<std::vector<double>>>();
    for (const auto& c : j.at("contacts")) {
      Contact contact;
      contact.position = vec2(c.at("position"));
      contact.unit_normal = vec2(c.at("normal"));
      contact.normal_force = c.at("force").get<double>();
      contact.finger = c.at("finger").get<int>();
      contact.sensor = c.at("sensor").get<int>();
      step.report.contacts.push_back(contact);
    }
    step.report.sensor_activations.assign(j.at("sensor_count").get<std::size_t>(), false);
    for (int k : j.at("active_sensors")) step.report.sensor_activations.at(k) = true;
    step.report.contact_count = j.at("report_contact_count").get<int>();
    traj.push_back(std::move(step));
  }
  return {traj, goal};
}

}  // namespace fmsr

#pragma once

// Planar quasi-static surrogate of an in-hand object rotation task.
//
// The hand is seen from above: a disc-shaped object rests on a circular palm
// and is surrounded by 2-link fingers whose bases are evenly spaced around the
// palm. The first half of a finger's joints (averaged) swings its base around
// the palm center, the second half bends the 2-link chain and sets its reach.
// Each finger is driven by one agent; an optional wrist agent tilts the palm,
// which makes the object drift. Contacts are penetration based and every
// contact activates exactly one tactile cell.

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fmsr {

constexpr double kPi = 3.14159265358979323846;

/// Maps an angle onto (-pi, pi].
double wrap_angle(double angle);

enum class ObjectShape { Block, Egg };
enum class AgentRole { Wrist, Thumb, Index, Middle, Ring, Little };
enum class HeightFlag { OnPalm, Fallen };
enum class Outcome { Success, Incomplete, Drop };

std::string_view to_string(ObjectShape shape);
std::string_view to_string(AgentRole role);
std::string_view to_string(Outcome outcome);
ObjectShape object_shape_from_string(std::string_view name);
AgentRole agent_role_from_string(std::string_view name);

struct EnvConfig {
  int num_fingers = 5;
  bool wrist_enabled = true;
  /// Either one entry per hand part in the order wrist, thumb, index, middle,
  /// ring, little, or exactly one entry per active agent.
  std::vector<int> dofs_per_agent{2, 5, 3, 3, 3, 4};
  ObjectShape object_shape = ObjectShape::Block;
  Eigen::Vector2d palm_center{0.0, 0.0};
  double palm_radius = 0.05;
  int sensor_count = 92;
  double time_step = 0.04;
  int max_episode_steps = 50;
  double friction_coefficient = 1.0;
  int drop_grace_steps = 10;

  // Surrogate physics. Lengths in meters, angles in radians.
  double joint_rate_limit = 0.1;  // joint delta per step at |action| = 1
  double joint_limit = 1.5;
  double finger_base_radius = 0.07;
  double proximal_length = 0.03;
  double distal_length = 0.025;
  int contact_points_per_finger = 4;  // samples along the distal link
  double initial_penetration = 0.003;
  double contact_stiffness = 1000.0;      // N/m
  double activation_threshold = 0.01;     // N
  double force_saturation = 2.0;          // N, full friction transmission
  double object_inertia = 1.2;            // dimensionless rotation damping
  double max_angular_velocity = 6.0;      // rad/s
  double tilt_gain = 0.05;                // m/s drift at unit tilt
  double egg_noise = 0.0004;              // m, per-step center jitter (Egg only)
  double block_radius = 0.025;
  double egg_radius = 0.018;
  double initial_offset = 0.005;          // max initial center offset

  /// Throws ConfigError on invalid values.
  void validate() const;

  std::vector<AgentRole> agent_roles() const;
  std::vector<int> agent_dofs() const;
  int total_dofs() const;
  int finger_count_with_wrist() const { return num_fingers + (wrist_enabled ? 1 : 0); }
  double object_radius() const;
  int max_contacts() const { return num_fingers * contact_points_per_finger; }
};

struct EnvState {
  std::vector<std::vector<double>> joint_positions;
  std::vector<std::vector<double>> joint_velocities;
  double object_angle = 0.0;
  double object_angular_velocity = 0.0;
  Eigen::Vector2d object_center{0.0, 0.0};
  HeightFlag object_height_flag = HeightFlag::OnPalm;
  int step_index = 0;
  int contact_count = 0;
  int low_contact_steps = 0;
  std::uint64_t episode_seed = 0;

  bool operator==(const EnvState&) const = default;
};

struct Goal {
  double target_angle = 0.0;
  bool operator==(const Goal&) const = default;
};

struct Contact {
  Eigen::Vector2d position{0.0, 0.0};
  Eigen::Vector2d unit_normal{0.0, 0.0};  // points into the object
  double normal_force = 0.0;
  int finger = -1;
  int sensor = -1;

  bool operator==(const Contact&) const = default;
};

struct ContactReport {
  std::vector<Contact> contacts;
  std::vector<bool> sensor_activations;
  int contact_count = 0;

  bool operator==(const ContactReport&) const = default;
};

struct StepResult {
  EnvState state;
  ContactReport report;
  bool terminated = false;
};

struct TrajectoryStep {
  EnvState state;
  ContactReport report;
};
using Trajectory = std::vector<TrajectoryStep>;

class PlanarHandEnv {
 public:
  explicit PlanarHandEnv(EnvConfig config);

  const EnvConfig& config() const { return config_; }
  int num_agents() const { return static_cast<int>(roles_.size()); }
  const std::vector<AgentRole>& roles() const { return roles_; }
  const std::vector<int>& dofs() const { return dofs_; }

  /// Deterministic in (config, seed).
  std::pair<EnvState, Goal> reset(std::uint64_t seed) const;

  /// Pure function of (state, actions). Throws ContractViolation on shape
  /// mismatch. A Fallen state stays Fallen and reports terminated.
  StepResult step(const EnvState& state,
                  const std::vector<std::vector<double>>& actions) const;

  /// Contacts for a state without advancing it.
  ContactReport contacts(const EnvState& state) const;

  bool terminated(const EnvState& state) const;

  /// Fingertip and distal sample points for finger `finger` (0-based among
  /// fingers, wrist excluded). The last point is the tip.
  std::vector<Eigen::Vector2d> finger_points(const EnvState& state, int finger) const;

  /// Index of the agent that drives finger `finger`.
  int finger_agent(int finger) const { return finger + (config_.wrist_enabled ? 1 : 0); }

 private:
  struct Angles {
    double swing;
    double bend;
  };
  Angles finger_angles(const std::vector<double>& joints) const;
  std::vector<Eigen::Vector2d> points_from_angles(int finger, Angles angles) const;
  ContactReport contacts_at(const std::vector<std::vector<Eigen::Vector2d>>& points,
                            const Eigen::Vector2d& center) const;
  Eigen::Vector2d settle(const std::vector<std::vector<Eigen::Vector2d>>& points,
                         Eigen::Vector2d center) const;
  double solve_initial_bend(int finger) const;

  EnvConfig config_;
  std::vector<AgentRole> roles_;
  std::vector<int> dofs_;
  std::vector<double> finger_base_angle_;
  std::vector<double> initial_bend_;
  int sensors_per_finger_ = 0;
};

bool is_success(const EnvState& state, const Goal& goal, double threshold);

/// Success if the goal is met at any step, else Drop if the object fell at any
/// step, else Incomplete. Throws ContractViolation on an empty trajectory.
Outcome classify_outcome(const Trajectory& trajectory, const Goal& goal, double test_threshold);

// Line-delimited trajectory records: one JSON object per step.
void write_trajectory(std::ostream& out, const Trajectory& trajectory, const Goal& goal);
std::pair<Trajectory, Goal> read_trajectory(std::istream& in);

}  // namespace fmsr

#include "fmsr/config.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fmsr/error.hpp"

namespace fmsr {

using nlohmann::json;

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::DenseFmsrIs: return "dense_fmsr_is";
    case Ablation::DenseFmsr: return "dense_fmsr";
    case Ablation::Dense: return "dense";
    case Ablation::Sparse: return "sparse";
  }
  return "?";
}

Ablation ablation_from_string(std::string_view name) {
  for (Ablation a : {Ablation::DenseFmsrIs, Ablation::DenseFmsr, Ablation::Dense, Ablation::Sparse})
    if (to_string(a) == name) return a;
  throw ConfigError("unknown ablation: " + std::string(name));
}

double RunConfig::effective_alpha() const {
  return ablation == Ablation::DenseFmsrIs || ablation == Ablation::DenseFmsr ? reward.alpha : 0.0;
}

SafeRegionSpec RunConfig::safe_region() const { return {env.palm_center, safe_radius_factor * env.palm_radius}; }

void RunConfig::validate() const {
  if (epochs < 1 || cycles_per_epoch < 1 || batches_per_cycle < 1 || rollout_workers < 1 || episodes_per_worker < 1)
    throw ConfigError("epochs, cycles, batches, workers and episodes per worker must all be >= 1");
  if (eval_trials_validation < 1 || eval_trials_test < 1 || failure_trials < 1)
    throw ConfigError("trial counts must be >= 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (!(train_threshold > 0.0) || !(test_threshold > 0.0)) throw ConfigError("success thresholds must be positive");
  if (!(tau_soft >= 0.0 && tau_soft <= 1.0)) throw ConfigError("tau_soft must be in [0, 1]");
  if (warmup_transitions < 0) throw ConfigError("warmup_transitions must be >= 0");
  if (!(safe_radius_factor > 0.0)) throw ConfigError("safe_radius_factor must be positive");
  if (occupancy.window < 1) throw ConfigError("occupancy window must be >= 1");
  if (!(occupancy.gamma >= 0.0 && occupancy.gamma < 1.0)) throw ConfigError("occupancy gamma must be in [0, 1)");
  if (occupancy.offset_bins < 1 || occupancy.joint_bins < 1 || occupancy.action_bins < 1)
    throw ConfigError("bins_per_feature must be >= 1");
  if (agent.hidden_layers.empty()) throw ConfigError("agent.hidden_layers must not be empty");
  for (int h : agent.hidden_layers)
    if (h < 1) throw ConfigError("hidden layer sizes must be >= 1");
  if (agent.batch_size < 1 || agent.replay_capacity < 1) throw ConfigError("batch_size and replay_capacity must be >= 1");
  if (!(agent.actor_learning_rate > 0.0) || !(agent.critic_learning_rate > 0.0))
    throw ConfigError("learning rates must be positive");
  if (!(agent.gamma >= 0.0 && agent.gamma < 1.0)) throw ConfigError("agent gamma must be in [0, 1)");
  if (agent.exploration_sigma < 0.0) throw ConfigError("exploration_sigma must be >= 0");
  env.validate();
  reward.validate();
  if (sharing_enabled()) {
    // Fails early on too few participants.
    build_ring_topology(env.agent_roles(), consensus.include_wrist);
  }
}

RunConfig desk_config(Ablation ablation) {
  RunConfig c;
  c.name = std::string("desk_") + std::string(to_string(ablation));
  c.ablation = ablation;
  c.env.num_fingers = 3;
  c.env.wrist_enabled = true;
  c.env.dofs_per_agent = {2, 5, 3, 3, 3, 4};
  // Three fingers hold the object with three contacts at rest; the
  // full-hand threshold of 10 would label every state low-contact.
  c.reward.contact_threshold = 3;
  c.agent.batch_size = 128;
  c.agent.replay_capacity = 100000;
  c.warmup_transitions = 256;
  return c;
}

RunConfig full_scale_config(Ablation ablation) {
  RunConfig c;
  c.name = std::string("full_") + std::string(to_string(ablation));
  c.ablation = ablation;
  c.epochs = 400;
  c.cycles_per_epoch = 25;
  c.batches_per_cycle = 25;
  c.rollout_workers = 4;
  c.episodes_per_worker = 2;
  c.tau_soft = 0.05;
  c.agent.batch_size = 256;
  c.warmup_transitions = 256;
  return c;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json env_json(const EnvConfig& e) {
  return {{"num_fingers", e.num_fingers},
          {"wrist_enabled", e.wrist_enabled},
          {"dofs_per_agent", e.dofs_per_agent},
          {"palm_center", {e.palm_center.x(), e.palm_center.y()}},
          {"palm_radius", e.palm_radius},
          {"sensor_count", e.sensor_count},
          {"time_step", e.time_step},
          {"max_episode_steps", e.max_episode_steps},
          {"friction_coefficient", e.friction_coefficient},
          {"drop_grace_steps", e.drop_grace_steps},
          {"joint_rate_limit", e.joint_rate_limit},
          {"joint_limit", e.joint_limit},
          {"finger_base_radius", e.finger_base_radius},
          {"proximal_length", e.proximal_length},
          {"distal_length", e.distal_length},
          {"contact_points_per_finger", e.contact_points_per_finger},
          {"initial_penetration", e.initial_penetration},
          {"contact_stiffness", e.contact_stiffness},
          {"activation_threshold", e.activation_threshold},
          {"force_saturation", e.force_saturation},
          {"object_inertia", e.object_inertia},
          {"max_angular_velocity", e.max_angular_velocity},
          {"tilt_gain", e.tilt_gain},
          {"egg_noise", e.egg_noise},
          {"block_radius", e.block_radius},
          {"egg_radius", e.egg_radius},
          {"initial_offset", e.initial_offset}};
}

// Reads keys from an object, rejecting unknown ones so typos fail loudly.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.contains(key)) throw ConfigError("unknown key " + where_ + "." + key);
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("bad value for " + where_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_env(const json& j, EnvConfig& e) {
  Reader r(j, "env");
  r.get("num_fingers", e.num_fingers);
  r.get("wrist_enabled", e.wrist_enabled);
  r.get("dofs_per_agent", e.dofs_per_agent);
  if (const json* pc = r.child("palm_center")) {
    if (!pc->is_array() || pc->size() != 2) throw ConfigError("env.palm_center must be [x, y]");
    e.palm_center = {pc->at(0).get<double>(), pc->at(1).get<double>()};
  }
  r.get("palm_radius", e.palm_radius);
  r.get("sensor_count", e.sensor_count);
  r.get("time_step", e.time_step);
  r.get("max_episode_steps", e.max_episode_steps);
  r.get("friction_coefficient", e.friction_coefficient);
  r.get("drop_grace_steps", e.drop_grace_steps);
  r.get("joint_rate_limit", e.joint_rate_limit);
  r.get("joint_limit", e.joint_limit);
  r.get("finger_base_radius", e.finger_base_radius);
  r.get("proximal_length", e.proximal_length);
  r.get("distal_length", e.distal_length);
  r.get("contact_points_per_finger", e.contact_points_per_finger);
  r.get("initial_penetration", e.initial_penetration);
  r.get("contact_stiffness", e.contact_stiffness);
  r.get("activation_threshold", e.activation_threshold);
  r.get("force_saturation", e.force_saturation);
  r.get("object_inertia", e.object_inertia);
  r.get("max_angular_velocity", e.max_angular_velocity);
  r.get("tilt_gain", e.tilt_gain);
  r.get("egg_noise", e.egg_noise);
  r.get("block_radius", e.block_radius);
  r.get("egg_radius", e.egg_radius);
  r.get("initial_offset", e.initial_offset);
}

}  // namespace

std::string to_json(const RunConfig& c) {
  json j;
  j["name"] = c.name;
  j["task"] = std::string(to_string(c.task));
  j["ablation"] = std::string(to_string(c.ablation));
  j["epochs"] = c.epochs;
  j["cycles_per_epoch"] = c.cycles_per_epoch;
  j["batches_per_cycle"] = c.batches_per_cycle;
  j["rollout_workers"] = c.rollout_workers;
  j["episodes_per_worker"] = c.episodes_per_worker;
  j["seeds"] = c.seeds;
  j["train_threshold"] = c.train_threshold;
  j["test_threshold"] = c.test_threshold;
  j["eval_trials_validation"] = c.eval_trials_validation;
  j["eval_trials_test"] = c.eval_trials_test;
  j["failure_trials"] = c.failure_trials;
  j["tau_soft"] = c.tau_soft;
  j["terminate_on_drop"] = c.terminate_on_drop;
  j["warmup_transitions"] = c.warmup_transitions;
  j["validation_seed"] = c.validation_seed;
  j["test_seed"] = c.test_seed;
  j["failure_seed"] = c.failure_seed;
  j["output_dir"] = c.output_dir;
  j["env"] = env_json(c.env);
  j["reward"] = {{"alpha", c.reward.alpha},
                 {"log_offset", c.reward.log_offset},
                 {"contact_threshold", c.reward.contact_threshold},
                 {"literal_sign_mode", c.reward.literal_sign_mode},
                 {"safe_radius_factor", c.safe_radius_factor}};
  j["agent"] = {{"hidden_layers", c.agent.hidden_layers},
                {"actor_learning_rate", c.agent.actor_learning_rate},
                {"critic_learning_rate", c.agent.critic_learning_rate},
                {"gamma", c.agent.gamma},
                {"exploration_sigma", c.agent.exploration_sigma},
                {"replay_capacity", c.agent.replay_capacity},
                {"batch_size", c.agent.batch_size},
                {"shadow_baseline", c.agent.shadow_baseline},
                {"init_scale", c.agent.init_scale}};
  j["occupancy"] = {{"gamma", c.occupancy.gamma},
                    {"window", c.occupancy.window},
                    {"offset_bins", c.occupancy.offset_bins},
                    {"joint_bins", c.occupancy.joint_bins},
                    {"action_bins", c.occupancy.action_bins}};
  j["consensus"] = {{"include_wrist", c.consensus.include_wrist}, {"share_critic", c.consensus.share_critic}};
  return j.dump(2);
}

RunConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  // A preset picks the starting point; explicit keys override it.
  {
    std::string ablation = std::string(to_string(c.ablation));
    if (j.contains("ablation")) ablation = j.at("ablation").get<std::string>();
    const Ablation a = ablation_from_string(ablation);
    const std::string preset = j.value("preset", std::string("desk"));
    if (preset == "desk")
      c = desk_config(a);
    else if (preset == "full")
      c = full_scale_config(a);
    else if (preset == "default")
      c.ablation = a;
    else
      throw ConfigError("unknown preset: " + preset);
  }
  {
    Reader r(j, "config");
    std::string ignored;
    r.get("preset", ignored);
    r.get("ablation", ignored);
    r.get("name", c.name);
    std::string task = std::string(to_string(c.task));
    r.get("task", task);
    c.task = object_shape_from_string(task);
    r.get("epochs", c.epochs);
    r.get("cycles_per_epoch", c.cycles_per_epoch);
    r.get("batches_per_cycle", c.batches_per_cycle);
    r.get("rollout_workers", c.rollout_workers);
    r.get("episodes_per_worker", c.episodes_per_worker);
    r.get("seeds", c.seeds);
    r.get("train_threshold", c.train_threshold);
    r.get("test_threshold", c.test_threshold);
    r.get("eval_trials_validation", c.eval_trials_validation);
    r.get("eval_trials_test", c.eval_trials_test);
    r.get("failure_trials", c.failure_trials);
    r.get("tau_soft", c.tau_soft);
    r.get("terminate_on_drop", c.terminate_on_drop);
    r.get("warmup_transitions", c.warmup_transitions);
    r.get("validation_seed", c.validation_seed);
    r.get("test_seed", c.test_seed);
    r.get("failure_seed", c.failure_seed);
    r.get("output_dir", c.output_dir);
    if (const json* e = r.child("env")) read_env(*e, c.env);
    if (const json* w = r.child("reward")) {
      Reader rr(*w, "reward");
      rr.get("alpha", c.reward.alpha);
      rr.get("log_offset", c.reward.log_offset);
      rr.get("contact_threshold", c.reward.contact_threshold);
      rr.get("literal_sign_mode", c.reward.literal_sign_mode);
      rr.get("safe_radius_factor", c.safe_radius_factor);
    }
    if (const json* a = r.child("agent")) {
      Reader ra(*a, "agent");
      ra.get("hidden_layers", c.agent.hidden_layers);
      ra.get("actor_learning_rate", c.agent.actor_learning_rate);
      ra.get("critic_learning_rate", c.agent.critic_learning_rate);
      ra.get("gamma", c.agent.gamma);
      ra.get("exploration_sigma", c.agent.exploration_sigma);
      ra.get("replay_capacity", c.agent.replay_capacity);
      ra.get("batch_size", c.agent.batch_size);
      ra.get("shadow_baseline", c.agent.shadow_baseline);
      ra.get("init_scale", c.agent.init_scale);
    }
    if (const json* o = r.child("occupancy")) {
      Reader ro(*o, "occupancy");
      ro.get("gamma", c.occupancy.gamma);
      ro.get("window", c.occupancy.window);
      ro.get("offset_bins", c.occupancy.offset_bins);
      ro.get("joint_bins", c.occupancy.joint_bins);
      ro.get("action_bins", c.occupancy.action_bins);
    }
    if (const json* s = r.child("consensus")) {
      Reader rs(*s, "consensus");
      rs.get("include_wrist", c.consensus.include_wrist);
      rs.get("share_critic", c.consensus.share_critic);
    }
  }
  c.env.object_shape = c.task;
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::uint64_t config_hash(const RunConfig& config) {
  // output_dir is where results go, not what they are.
  RunConfig c = config;
  c.output_dir.clear();
  const std::string text = to_json(c);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::filesystem::path resolve_output_dir(const RunConfig& config) {
  if (const char* env = std::getenv("FMSR_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return config.output_dir;
}

}  // namespace fmsr

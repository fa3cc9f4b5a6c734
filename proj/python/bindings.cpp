// Python surface: configs travel as JSON strings, matrices as numpy arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "fmsr/config.hpp"
#include "fmsr/consensus.hpp"
#include "fmsr/error.hpp"
#include "fmsr/evaluation.hpp"
#include "fmsr/occupancy.hpp"
#include "fmsr/shadow_reward.hpp"
#include "fmsr/stability_metrics.hpp"
#include "fmsr/trainer.hpp"

namespace py = pybind11;
using namespace fmsr;

namespace {

/// Stateful wrapper: the C++ env is pure, Python callers expect reset/step.
class PyEnv {
 public:
  PyEnv(int num_fingers, const std::string& shape) : env_(make_config(num_fingers, shape)) {}

  py::dict reset(std::uint64_t seed) {
    std::tie(state_, goal_) = env_.reset(seed);
    return observe(env_.contacts(state_));
  }

  py::dict step(const std::vector<std::vector<double>>& actions) {
    const StepResult r = env_.step(state_, actions);
    state_ = r.state;
    return observe(r.report);
  }

  std::vector<int> dofs() const { return env_.dofs(); }
  std::vector<std::string> roles() const {
    std::vector<std::string> out;
    for (auto r : env_.roles()) out.emplace_back(to_string(r));
    return out;
  }

 private:
  static EnvConfig make_config(int num_fingers, const std::string& shape) {
    EnvConfig c;
    c.num_fingers = num_fingers;
    c.object_shape = object_shape_from_string(shape);
    return c;
  }

  py::dict observe(const ContactReport& report) const {
    py::dict d;
    d["object_angle"] = state_.object_angle;
    d["goal_angle"] = goal_.target_angle;
    d["object_center"] = std::vector<double>{state_.object_center.x(), state_.object_center.y()};
    d["fallen"] = state_.object_height_flag == HeightFlag::Fallen;
    d["step"] = state_.step_index;
    d["contact_count"] = state_.contact_count;
    d["joint_positions"] = state_.joint_positions;
    d["q_msv"] = q_msv(build_grasp_matrix(report, state_.object_center));
    d["q_vew"] = q_vew(build_grasp_matrix(report, state_.object_center));
    d["done"] = env_.terminated(state_);
    return d;
  }

  PlanarHandEnv env_;
  EnvState state_;
  Goal goal_;
};

py::dict train(const std::string& config_json, std::uint64_t seed, const std::string& out_dir) {
  const RunConfig c = config_from_json(config_json);
  TrainArtifacts a;
  {
    py::gil_scoped_release release;
    a = train_run(c, seed, out_dir);
  }
  py::dict d;
  d["dir"] = a.dir.string();
  d["manifest"] = a.manifest.string();
  d["curve"] = a.curve.string();
  d["audit"] = a.audit.string();
  d["checkpoint"] = a.checkpoint.string();
  d["timings"] = a.timings.string();
  return d;
}

EvaluationResult evaluate_checkpoint(const std::string& path, int trials, std::optional<double> threshold,
                                     std::optional<std::uint64_t> set_seed) {
  const Checkpoint ck = load_checkpoint(path);
  return evaluate_policy(ck.env, ActorPolicy(ck.learner), trials, threshold.value_or(ck.config.test_threshold),
                         set_seed.value_or(ck.config.test_seed), ck.config.rollout_workers);
}

py::dict evaluation_dict(const EvaluationResult& r) {
  py::dict d;
  d["success_rate"] = r.success_rate;
  d["threshold"] = r.threshold;
  d["set_seed"] = r.set_seed;
  std::vector<std::string> outcomes;
  std::vector<double> goals, msv, vew;
  std::vector<long> contact;
  for (const auto& t : r.trials) {
    outcomes.emplace_back(to_string(t.summary.outcome));
    goals.push_back(t.goal.target_angle);
    msv.push_back(t.summary.q_msv.mean);
    vew.push_back(t.summary.q_vew.mean);
    contact.push_back(t.summary.total_contact);
  }
  d["outcomes"] = outcomes;
  d["goals"] = goals;
  d["q_msv"] = msv;
  d["q_vew"] = vew;
  d["total_contact"] = contact;
  return d;
}

py::dict failure_dict(const FailureRow& row) {
  py::dict d;
  d["policy"] = row.name;
  d["trials"] = row.trials;
  d["failures"] = row.failures;
  d["incomplete"] = row.incomplete;
  d["drop"] = row.drop;
  d["incomplete_pct"] = row.incomplete_pct;
  d["drop_pct"] = row.drop_pct;
  d["drop_fraction"] = row.drop_fraction;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "planar-hand multi-agent shadow-reward core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<VersionError>(m, "VersionError", PyExc_ValueError);
  py::register_exception<NotApplicableError>(m, "NotApplicableError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);

  py::class_<PyEnv>(m, "Env")
      .def(py::init<int, const std::string&>(), py::arg("num_fingers") = 3, py::arg("shape") = "block")
      .def("reset", &PyEnv::reset, py::arg("seed"))
      .def("step", &PyEnv::step, py::arg("actions"))
      .def_property_readonly("dofs", &PyEnv::dofs)
      .def_property_readonly("roles", &PyEnv::roles);

  m.def("desk_config", [](const std::string& ablation) { return to_json(desk_config(ablation_from_string(ablation))); },
        py::arg("ablation"));
  m.def("full_scale_config",
        [](const std::string& ablation) { return to_json(full_scale_config(ablation_from_string(ablation))); },
        py::arg("ablation"));
  m.def("load_config", [](const std::string& path) { return to_json(load_config(path)); }, py::arg("path"));
  m.def("config_diff",
        [](const std::string& a, const std::string& b) { return config_diff(config_from_json(a), config_from_json(b)); },
        py::arg("a"), py::arg("b"));

  m.def("train", &train, py::arg("config_json"), py::arg("seed"), py::arg("out_dir"));
  m.def(
      "evaluate",
      [](const std::string& checkpoint, int trials, std::optional<double> threshold,
         std::optional<std::uint64_t> set_seed) {
        EvaluationResult r;
        {
          py::gil_scoped_release release;
          r = evaluate_checkpoint(checkpoint, trials, threshold, set_seed);
        }
        return evaluation_dict(r);
      },
      py::arg("checkpoint"), py::arg("trials"), py::arg("threshold") = py::none(), py::arg("set_seed") = py::none());
  m.def(
      "failure_row",
      [](const std::string& checkpoint, int trials) {
        const Checkpoint ck = load_checkpoint(checkpoint);
        EvaluationResult r;
        {
          py::gil_scoped_release release;
          r = evaluate_policy(ck.env, ActorPolicy(ck.learner), trials, ck.config.test_threshold, ck.config.failure_seed,
                              ck.config.rollout_workers);
        }
        return failure_dict(failure_row(ck.config.name, r));
      },
      py::arg("checkpoint"), py::arg("trials") = 500);
  m.def(
      "ablation_report",
      [](const std::vector<std::string>& checkpoints, int trials) {
        std::vector<std::string> names;
        std::vector<EvaluationResult> evals;
        for (const auto& path : checkpoints) {
          const Checkpoint ck = load_checkpoint(path);
          names.push_back(ck.config.name);
          evals.push_back(evaluate_policy(ck.env, ActorPolicy(ck.learner), trials, ck.config.test_threshold,
                                          ck.config.test_seed, ck.config.rollout_workers));
        }
        std::ostringstream out;
        write_ablation_csv(out, ablation_report(names, evals));
        return out.str();
      },
      py::arg("checkpoints"), py::arg("trials") = 100);
  m.def(
      "checkpoint_info",
      [](const std::string& path) {
        const Checkpoint ck = load_checkpoint(path);
        py::dict d;
        d["config"] = to_json(ck.config);
        d["seed"] = ck.seed;
        d["agents"] = ck.learner.num_agents();
        return d;
      },
      py::arg("path"));

  m.def(
      "occupancy_masses",
      [](const std::vector<std::vector<std::pair<int, int>>>& episodes, int states, int actions, double gamma,
         int window, int horizon) {
        BinningSpec spec{{FeatureAxis{Feature::Generic, states, 0.0, static_cast<double>(states)},
                          FeatureAxis{Feature::Generic, actions, 0.0, static_cast<double>(actions)}}};
        OccupancyTable t(0, spec, gamma, window, horizon);
        for (const auto& ep : episodes) {
          std::vector<std::vector<double>> f;
          for (auto [s, a] : ep) f.push_back({s + 0.5, a + 0.5});
          t.update(f);
        }
        // Bins are row-major over (state, action) with the last axis fastest.
        Eigen::MatrixXd out(states, actions);
        for (int s = 0; s < states; ++s)
          for (int a = 0; a < actions; ++a) {
            const std::vector<double> f{s + 0.5, a + 0.5};
            out(s, a) = t.masses()[spec.bin_of(f)];
          }
        return out;
      },
      py::arg("episodes"), py::arg("states"), py::arg("actions"), py::arg("gamma") = 0.98, py::arg("window") = 50,
      py::arg("horizon") = 50,
      "Discounted visit mass per (state, action) of tabular episodes of (state, action) pairs.");
  m.def("shadow_log_term", &shadow_log_term, py::arg("mass"), py::arg("log_offset") = 0.1);
  m.def(
      "is_success",
      [](double angle, double goal, double threshold) {
        EnvState s;
        s.object_angle = angle;
        return is_success(s, Goal{goal}, threshold);
      },
      py::arg("angle"), py::arg("goal"), py::arg("threshold"));

  m.def("q_msv", py::overload_cast<const Eigen::MatrixXd&>(&q_msv), py::arg("grasp_matrix"));
  m.def("q_vew", py::overload_cast<const Eigen::MatrixXd&>(&q_vew), py::arg("grasp_matrix"));
  m.def(
      "q_dcc",
      [](const Eigen::MatrixXd& positions, const Eigen::Vector2d& center) -> std::optional<double> {
        FMSR_REQUIRE(positions.cols() == 2, "contact positions are n x 2");
        ContactReport r;
        for (Eigen::Index k = 0; k < positions.rows(); ++k) {
          Contact c;
          c.position = positions.row(k).transpose();
          c.sensor = static_cast<int>(k);
          r.contacts.push_back(c);
          r.sensor_activations.push_back(true);
        }
        r.contact_count = static_cast<int>(positions.rows());
        return q_dcc(r, center);
      },
      py::arg("positions"), py::arg("center"));

  m.def(
      "metropolis_weights",
      [](const std::vector<std::string>& roles, bool include_wrist) {
        std::vector<AgentRole> r;
        for (const auto& s : roles) r.push_back(agent_role_from_string(s));
        return metropolis_weights(build_ring_topology(r, include_wrist)).weights;
      },
      py::arg("roles"), py::arg("include_wrist") = false);
  m.def(
      "share",
      [](const std::vector<std::vector<double>>& params, const std::vector<std::string>& roles, bool include_wrist) {
        std::vector<AgentRole> r;
        for (const auto& s : roles) r.push_back(agent_role_from_string(s));
        return share(params, metropolis_weights(build_ring_topology(r, include_wrist)));
      },
      py::arg("params"), py::arg("roles"), py::arg("include_wrist") = false,
      "One consensus step over the ring of `roles`; params has one row per participating agent.");
}

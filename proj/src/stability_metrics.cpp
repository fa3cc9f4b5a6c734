#include "fmsr/stability_metrics.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <ostream>

#include "fmsr/error.hpp"

namespace fmsr {

namespace {

bool active(const ContactReport& report, const Contact& c) {
  if (c.sensor >= 0 && c.sensor < static_cast<int>(report.sensor_activations.size()))
    return report.sensor_activations[c.sensor];
  return c.normal_force > 0.0;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& g) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(g).singularValues();
}

}  // namespace

GraspMatrix build_grasp_matrix(const ContactReport& report, const Eigen::Vector2d& object_center) {
  std::vector<const Contact*> used;
  for (const auto& c : report.contacts)
    if (active(report, c)) used.push_back(&c);
  GraspMatrix g;
  g.contacts = static_cast<int>(used.size());
  g.matrix = Eigen::MatrixXd::Zero(3, 2 * g.contacts);
  for (int k = 0; k < g.contacts; ++k) {
    const Contact& c = *used[k];
    const Eigen::Vector2d r = c.position - object_center;
    const Eigen::Vector2d n = c.unit_normal;
    const Eigen::Vector2d t(-n.y(), n.x());
    g.matrix.col(2 * k) << n.x(), n.y(), r.x() * n.y() - r.y() * n.x();
    g.matrix.col(2 * k + 1) << t.x(), t.y(), r.x() * t.y() - r.y() * t.x();
  }
  return g;
}

double q_msv(const Eigen::MatrixXd& g) {
  if (g.size() == 0 || g.cols() < g.rows()) return 0.0;
  return singular_values(g).minCoeff();
}

double q_msv(const GraspMatrix& g) { return g.empty() ? 0.0 : q_msv(g.matrix); }

double q_vew(const Eigen::MatrixXd& g) {
  if (g.size() == 0 || g.cols() < g.rows()) return 0.0;
  const Eigen::VectorXd s = singular_values(g);
  if (s.minCoeff() <= 1e-12 * s.maxCoeff()) return 0.0;
  return s.prod();
}

double q_vew(const GraspMatrix& g) { return g.empty() ? 0.0 : q_vew(g.matrix); }

std::optional<double> q_dcc(const ContactReport& report, const Eigen::Vector2d& object_mass_center) {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : report.contacts) {
    if (!active(report, c)) continue;
    sum += (c.position - object_mass_center).norm();
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

StabilityRecord measure_step(const TrajectoryStep& step) {
  StabilityRecord r;
  r.step_index = step.state.step_index;
  r.contact_count = step.report.contact_count;
  const GraspMatrix g = build_grasp_matrix(step.report, step.state.object_center);
  r.q_msv = q_msv(g);
  r.q_vew = q_vew(g);
  r.q_dcc = q_dcc(step.report, step.state.object_center);
  return r;
}

std::vector<StabilityRecord> measure_trajectory(const Trajectory& trajectory) {
  std::vector<StabilityRecord> out;
  out.reserve(trajectory.size());
  for (const auto& s : trajectory) out.push_back(measure_step(s));
  return out;
}

StabilitySeries sample_series(const std::vector<StabilityRecord>& all, int stride, double time_step) {
  FMSR_REQUIRE(stride >= 1, "sample stride must be >= 1");
  StabilitySeries s;
  s.sample_stride = stride;
  s.time_step = time_step;
  for (std::size_t i = 0; i < all.size(); i += static_cast<std::size_t>(stride)) s.records.push_back(all[i]);
  return s;
}

std::optional<StabilitySeries> derive_series(const StabilitySeries& series) {
  if (series.records.size() < 2) return std::nullopt;
  StabilitySeries out = series;
  out.q_msv_deriv.clear();
  out.q_vew_deriv.clear();
  const double span = series.sample_stride * series.time_step;
  for (std::size_t k = 0; k + 1 < series.records.size(); ++k) {
    out.q_msv_deriv.push_back((series.records[k + 1].q_msv - series.records[k].q_msv) / span);
    out.q_vew_deriv.push_back((series.records[k + 1].q_vew - series.records[k].q_vew) / span);
  }
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd m;
  m.count = static_cast<int>(values.size());
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / values.size();
  double sq = 0.0;
  for (double v : values) sq += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(sq / values.size());
  return m;
}

TrialSummary summarize_trial(const Trajectory& trajectory, const Goal& goal, double threshold, int sample_stride,
                             double time_step) {
  TrialSummary t;
  t.outcome = classify_outcome(trajectory, goal, threshold);
  t.success = t.outcome == Outcome::Success;
  t.steps = static_cast<int>(trajectory.size());
  const auto all = measure_trajectory(trajectory);
  std::vector<double> msv, vew, dcc;
  for (const auto& r : all) {
    t.total_contact += r.contact_count;
    msv.push_back(r.q_msv);
    vew.push_back(r.q_vew);
    if (r.q_dcc) dcc.push_back(*r.q_dcc);
  }
  t.q_msv = mean_std(msv);
  t.q_vew = mean_std(vew);
  if (!dcc.empty()) t.q_dcc = mean_std(dcc);
  if (auto derived = derive_series(sample_series(all, sample_stride, time_step))) {
    std::vector<double> dm, dv;
    for (double d : derived->q_msv_deriv) dm.push_back(std::abs(d));
    for (double d : derived->q_vew_deriv) dv.push_back(std::abs(d));
    t.q_msv_deriv = mean_std(dm);
    t.q_vew_deriv = mean_std(dv);
  }
  return t;
}

void write_stability_csv(std::ostream& out, const std::vector<StabilityRecord>& all, int sample_stride,
                         double time_step) {
  out << "step,contact_count,q_msv,q_vew,q_dcc,q_msv_deriv,q_vew_deriv\n";
  out.precision(17);
  const auto derived = derive_series(sample_series(all, sample_stride, time_step));
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& r = all[i];
    out << r.step_index << ',' << r.contact_count << ',' << r.q_msv << ',' << r.q_vew << ',';
    if (r.q_dcc) out << *r.q_dcc;
    out << ',';
    const std::size_t k = i / static_cast<std::size_t>(sample_stride);
    const bool sampled = i % static_cast<std::size_t>(sample_stride) == 0;
    if (derived && sampled && k < derived->q_msv_deriv.size()) out << derived->q_msv_deriv[k];
    out << ',';
    if (derived && sampled && k < derived->q_vew_deriv.size()) out << derived->q_vew_deriv[k];
    out << '\n';
  }
}

}  // namespace fmsr

#pragma once

// Grasp-quality measures computed from tactile contact reports.

#include <Eigen/Core>

#include <iosfwd>
#include <optional>
#include <vector>

#include "fmsr/planar_hand_env.hpp"

namespace fmsr {

/// Planar hard-contact-with-friction grasp map: two force coordinates
/// (normal, tangential) per contact onto the wrench (f_x, f_y, torque_z).
struct GraspMatrix {
  Eigen::MatrixXd matrix;  // 3 x (2 * contacts)
  int contacts = 0;

  bool empty() const { return contacts == 0; }
};

/// Uses the contacts whose tactile cell is active. Zero contacts give an
/// empty grasp.
GraspMatrix build_grasp_matrix(const ContactReport& report, const Eigen::Vector2d& object_center);

/// Smallest singular value; 0 for an empty grasp or fewer columns than rows.
double q_msv(const Eigen::MatrixXd& g);
double q_msv(const GraspMatrix& g);

/// Product of the singular values (= sqrt(det(G G^T))); 0 when rank deficient.
double q_vew(const Eigen::MatrixXd& g);
double q_vew(const GraspMatrix& g);

/// Mean contact-to-centroid distance; nullopt without contacts.
std::optional<double> q_dcc(const ContactReport& report, const Eigen::Vector2d& object_mass_center);

struct StabilityRecord {
  int step_index = 0;
  int contact_count = 0;
  double q_msv = 0.0;
  double q_vew = 0.0;
  std::optional<double> q_dcc;
};

struct StabilitySeries {
  std::vector<StabilityRecord> records;  // sampled every sample_stride steps
  int sample_stride = 10;
  double time_step = 0.04;
  std::vector<double> q_msv_deriv;  // size records - 1 once derived
  std::vector<double> q_vew_deriv;
};

StabilityRecord measure_step(const TrajectoryStep& step);

/// Records for every step of a trajectory.
std::vector<StabilityRecord> measure_trajectory(const Trajectory& trajectory);

/// Every stride-th record (by position, starting at the first).
StabilitySeries sample_series(const std::vector<StabilityRecord>& all, int stride, double time_step);

/// Forward differences between consecutive samples over stride * time_step.
/// nullopt for fewer than two records.
std::optional<StabilitySeries> derive_series(const StabilitySeries& series);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
  int count = 0;
};
MeanStd mean_std(const std::vector<double>& values);

struct TrialSummary {
  Outcome outcome = Outcome::Incomplete;
  bool success = false;
  int steps = 0;
  long total_contact = 0;
  MeanStd q_msv, q_vew, q_msv_deriv, q_vew_deriv;
  std::optional<MeanStd> q_dcc;
};

/// Derivative statistics use magnitudes of the sampled forward differences.
TrialSummary summarize_trial(const Trajectory& trajectory, const Goal& goal, double threshold,
                             int sample_stride = 10, double time_step = 0.04);

/// Column order: step, contact_count, q_msv, q_vew, q_dcc, q_msv_deriv, q_vew_deriv.
/// Missing values are written as empty cells.
void write_stability_csv(std::ostream& out, const std::vector<StabilityRecord>& all, int sample_stride,
                         double time_step);

}  // namespace fmsr

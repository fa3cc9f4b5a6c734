#pragma once

// Windowed empirical estimate of an agent's discounted state-action occupancy
// measure over a uniform grid of low-dimensional features.

#include <cstddef>
#include <deque>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace fmsr {

enum class Feature { ObjectOffset, ContactCount, MeanJointPosition, MeanAction, Generic };

std::string_view to_string(Feature feature);

struct FeatureAxis {
  Feature kind = Feature::Generic;
  int bins = 1;
  double min = 0.0;
  double max = 1.0;
};

struct BinningSpec {
  std::vector<FeatureAxis> axes;

  void validate() const;
  std::size_t bin_count() const;
  /// Out-of-range features are clamped to the boundary bin.
  std::size_t bin_of(std::span<const double> features) const;
  /// Bin centers of `bin`, one value per axis.
  std::vector<double> representative(std::size_t bin) const;
  /// Axis index of `kind`, or -1.
  int axis_of(Feature kind) const;
};

/// Raw per-step quantities the env-side binning is built from.
struct FeatureInputs {
  double object_offset = 0.0;  // |center - palm center|, meters
  int contact_count = 0;
  double mean_joint_position = 0.0;
  double mean_action = 0.0;
};

/// Feature vector in axis order; Generic axes are not allowed here.
std::vector<double> extract_features(const BinningSpec& spec, const FeatureInputs& in);

/// Default grid: object offset, contact count (one bin per integer count),
/// coarse mean joint position and mean action.
BinningSpec default_binning(double palm_radius, int max_contacts, double joint_limit);

using StatePredicate = std::function<bool(std::span<const double>)>;

class OccupancyTable {
 public:
  OccupancyTable(int agent_id, BinningSpec spec, double gamma, int window, int horizon);

  /// Adds gamma^t at the bin of step t and evicts episodes beyond the window.
  /// Throws ContractViolation if the episode is longer than horizon + 1 steps
  /// or a feature vector has the wrong length.
  void update(const std::vector<std::vector<double>>& episode);

  /// Normalized mass of bins whose representative satisfies `predicate`;
  /// 0 for an empty table.
  double mass_of(const StatePredicate& predicate) const;
  /// Normalized sum of mass * phi(representative), phi in {0, 1}.
  double weighted_sum(const StatePredicate& phi) const;

  double total_mass() const;
  const std::vector<double>& masses() const { return masses_; }
  const BinningSpec& spec() const { return spec_; }
  int agent_id() const { return agent_id_; }
  double gamma() const { return gamma_; }
  int window() const { return window_; }
  int horizon() const { return horizon_; }
  std::size_t episodes_seen() const { return episodes_seen_; }
  std::size_t episodes_retained() const { return ring_.size(); }

  void write(std::ostream& out) const;
  static OccupancyTable read(std::istream& in);

 private:
  void add_episode(const std::vector<std::size_t>& bins);
  void rebuild();

  int agent_id_;
  BinningSpec spec_;
  double gamma_;
  int window_;
  int horizon_;
  std::vector<double> masses_;
  std::deque<std::vector<std::size_t>> ring_;
  std::size_t episodes_seen_ = 0;
};

}  // namespace fmsr

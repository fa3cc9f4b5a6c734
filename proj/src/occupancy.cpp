#include "fmsr/occupancy.hpp"

#include <algorithm>
#include <cmath>

#include "fmsr/binary_io.hpp"
#include "fmsr/error.hpp"

namespace fmsr {

std::string_view to_string(Feature feature) {
  switch (feature) {
    case Feature::ObjectOffset: return "object_offset";
    case Feature::ContactCount: return "contact_count";
    case Feature::MeanJointPosition: return "mean_joint_position";
    case Feature::MeanAction: return "mean_action";
    case Feature::Generic: return "generic";
  }
  return "?";
}

void BinningSpec::validate() const {
  if (axes.empty()) throw ConfigError("binning needs at least one feature axis");
  for (const auto& a : axes) {
    if (a.bins < 1) throw ConfigError("bins_per_feature must be >= 1");
    if (!std::isfinite(a.min) || !std::isfinite(a.max) || !(a.min < a.max))
      throw ConfigError("feature ranges must be finite and ordered");
  }
}

std::size_t BinningSpec::bin_count() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= static_cast<std::size_t>(a.bins);
  return n;
}

std::size_t BinningSpec::bin_of(std::span<const double> features) const {
  FMSR_REQUIRE(features.size() == axes.size(), "feature vector length does not match binning");
  std::size_t index = 0;
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const auto& a = axes[k];
    const double u = (features[k] - a.min) / (a.max - a.min);
    const int b = std::clamp(static_cast<int>(std::floor(u * a.bins)), 0, a.bins - 1);
    index = index * static_cast<std::size_t>(a.bins) + static_cast<std::size_t>(b);
  }
  return index;
}

std::vector<double> BinningSpec::representative(std::size_t bin) const {
  std::vector<double> rep(axes.size());
  for (std::size_t k = axes.size(); k-- > 0;) {
    const auto& a = axes[k];
    const std::size_t b = bin % static_cast<std::size_t>(a.bins);
    bin /= static_cast<std::size_t>(a.bins);
    rep[k] = a.min + (static_cast<double>(b) + 0.5) * (a.max - a.min) / a.bins;
  }
  return rep;
}

int BinningSpec::axis_of(Feature kind) const {
  for (std::size_t k = 0; k < axes.size(); ++k)
    if (axes[k].kind == kind) return static_cast<int>(k);
  return -1;
}

std::vector<double> extract_features(const BinningSpec& spec, const FeatureInputs& in) {
  std::vector<double> f;
  f.reserve(spec.axes.size());
  for (const auto& a : spec.axes) {
    switch (a.kind) {
      case Feature::ObjectOffset: f.push_back(in.object_offset); break;
      case Feature::ContactCount: f.push_back(static_cast<double>(in.contact_count)); break;
      case Feature::MeanJointPosition: f.push_back(in.mean_joint_position); break;
      case Feature::MeanAction: f.push_back(in.mean_action); break;
      case Feature::Generic: throw ContractViolation("generic axes need caller-supplied features");
    }
  }
  return f;
}

BinningSpec default_binning(double palm_radius, int max_contacts, double joint_limit) {
  BinningSpec spec;
  spec.axes.push_back({Feature::ObjectOffset, 20, 0.0, palm_radius});
  spec.axes.push_back({Feature::ContactCount, max_contacts + 1, -0.5, max_contacts + 0.5});
  spec.axes.push_back({Feature::MeanJointPosition, 5, -joint_limit, joint_limit});
  spec.axes.push_back({Feature::MeanAction, 5, -1.0, 1.0});
  return spec;
}

// ---------------------------------------------------------------------------

OccupancyTable::OccupancyTable(int agent_id, BinningSpec spec, double gamma, int window, int horizon)
    : agent_id_(agent_id), spec_(std::move(spec)), gamma_(gamma), window_(window), horizon_(horizon) {
  spec_.validate();
  if (!(gamma_ >= 0.0 && gamma_ < 1.0)) throw ConfigError("occupancy gamma must be in [0, 1)");
  if (window_ < 1) throw ConfigError("occupancy window must be >= 1");
  if (horizon_ < 0) throw ConfigError("occupancy horizon must be >= 0");
  masses_.assign(spec_.bin_count(), 0.0);
}

void OccupancyTable::add_episode(const std::vector<std::size_t>& bins) {
  double discount = 1.0;
  for (std::size_t b : bins) {
    masses_[b] += discount;
    discount *= gamma_;
  }
}

void OccupancyTable::rebuild() {
  std::fill(masses_.begin(), masses_.end(), 0.0);
  for (const auto& ep : ring_) add_episode(ep);
}

void OccupancyTable::update(const std::vector<std::vector<double>>& episode) {
  FMSR_REQUIRE(static_cast<int>(episode.size()) <= horizon_ + 1, "episode longer than the occupancy horizon");
  std::vector<std::size_t> bins;
  bins.reserve(episode.size());
  for (const auto& f : episode) bins.push_back(spec_.bin_of(f));
  ring_.push_back(std::move(bins));
  ++episodes_seen_;
  if (static_cast<int>(ring_.size()) > window_) {
    ring_.pop_front();
    rebuild();
  } else {
    add_episode(ring_.back());
  }
}

double OccupancyTable::total_mass() const {
  double total = 0.0;
  for (double m : masses_) total += m;
  return total;
}

double OccupancyTable::mass_of(const StatePredicate& predicate) const {
  const double total = total_mass();
  if (!(total > 0.0)) return 0.0;
  double selected = 0.0;
  for (std::size_t b = 0; b < masses_.size(); ++b) {
    if (masses_[b] == 0.0) continue;
    if (predicate(spec_.representative(b))) selected += masses_[b];
  }
  return std::clamp(selected / total, 0.0, 1.0);
}

double OccupancyTable::weighted_sum(const StatePredicate& phi) const { return mass_of(phi); }

void OccupancyTable::write(std::ostream& out) const {
  out.write("OCC1", 4);
  io::write_pod<std::int32_t>(out, agent_id_);
  io::write_pod(out, gamma_);
  io::write_pod<std::int32_t>(out, window_);
  io::write_pod<std::int32_t>(out, horizon_);
  io::write_pod<std::uint64_t>(out, spec_.axes.size());
  for (const auto& a : spec_.axes) {
    io::write_pod<std::int32_t>(out, static_cast<std::int32_t>(a.kind));
    io::write_pod<std::int32_t>(out, a.bins);
    io::write_pod(out, a.min);
    io::write_pod(out, a.max);
  }
  io::write_pod<std::uint64_t>(out, episodes_seen_);
  io::write_pod<std::uint64_t>(out, ring_.size());
  for (const auto& ep : ring_) {
    io::write_pod<std::uint64_t>(out, ep.size());
    for (std::size_t b : ep) io::write_pod<std::uint64_t>(out, b);
  }
  io::write_doubles(out, masses_);
}

OccupancyTable OccupancyTable::read(std::istream& in) {
  io::expect_magic(in, "OCC1");
  const int agent = io::read_pod<std::int32_t>(in);
  const double gamma = io::read_pod<double>(in);
  const int window = io::read_pod<std::int32_t>(in);
  const int horizon = io::read_pod<std::int32_t>(in);
  BinningSpec spec;
  const auto n_axes = io::read_pod<std::uint64_t>(in);
  for (std::uint64_t k = 0; k < n_axes; ++k) {
    FeatureAxis a;
    a.kind = static_cast<Feature>(io::read_pod<std::int32_t>(in));
    a.bins = io::read_pod<std::int32_t>(in);
    a.min = io::read_pod<double>(in);
    a.max = io::read_pod<double>(in);
    spec.axes.push_back(a);
  }
  OccupancyTable table(agent, spec, gamma, window, horizon);
  table.episodes_seen_ = io::read_pod<std::uint64_t>(in);
  const auto n_eps = io::read_pod<std::uint64_t>(in);
  for (std::uint64_t e = 0; e < n_eps; ++e) {
    const auto len = io::read_pod<std::uint64_t>(in);
    std::vector<std::size_t> bins(len);
    for (auto& b : bins) {
      b = io::read_pod<std::uint64_t>(in);
      if (b >= table.masses_.size()) throw VersionError("occupancy bin index out of range");
    }
    table.ring_.push_back(std::move(bins));
  }
  table.masses_ = io::read_doubles(in);
  if (table.masses_.size() != spec.bin_count()) throw VersionError("occupancy mass vector has wrong size");
  return table;
}

}  // namespace fmsr

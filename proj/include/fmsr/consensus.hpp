#pragma once

// Neighbor graph over the fingers and consensus averaging of per-agent
// parameter vectors through a symmetric doubly stochastic mixing matrix.

#include <Eigen/Core>

#include <utility>
#include <vector>

#include "fmsr/planar_hand_env.hpp"

namespace fmsr {

struct Topology {
  std::vector<AgentRole> agents;  // node order
  std::vector<std::pair<int, int>> edges;
  bool include_wrist = false;

  int size() const { return static_cast<int>(agents.size()); }
  int degree(int node) const;
  bool has_edge(int a, int b) const;
  bool connected() const;
  /// Node index of `role`, or -1 if it does not participate.
  int node_of(AgentRole role) const;
};

struct MixingMatrix {
  Eigen::MatrixXd weights;
  Topology topology;
};

/// Fingers in hand order joined in a loop (thumb and the last finger are
/// neighbors). With include_wrist the wrist joins, linked to thumb and index.
/// Throws ConfigError for fewer than three participants.
Topology build_ring_topology(const std::vector<AgentRole>& agent_ids, bool include_wrist);

/// M(i,j) = 1 / (1 + max(deg i, deg j)) on edges, diagonal takes the rest.
/// Throws ConfigError on a disconnected topology.
MixingMatrix metropolis_weights(const Topology& topology);

/// Symmetric, non-negative, unit row/column sums and zero off the edge set.
bool validate(const MixingMatrix& m, double tol);

/// theta_i <- sum_j M(j, i) theta_j. Throws ContractViolation on size mismatch.
std::vector<std::vector<double>> share(const std::vector<std::vector<double>>& params, const MixingMatrix& m);

/// Largest |eigenvalue| after the leading one of a symmetric mixing matrix;
/// the per-step contraction rate of disagreement.
double second_largest_eigenvalue_modulus(const MixingMatrix& m);

}  // namespace fmsr

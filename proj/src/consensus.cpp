#include "fmsr/consensus.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "fmsr/error.hpp"

namespace fmsr {

int Topology::degree(int node) const {
  int d = 0;
  for (const auto& [a, b] : edges) d += (a == node) + (b == node);
  return d;
}

bool Topology::has_edge(int a, int b) const {
  return std::any_of(edges.begin(), edges.end(), [&](const auto& e) {
    return (e.first == a && e.second == b) || (e.first == b && e.second == a);
  });
}

bool Topology::connected() const {
  if (agents.empty()) return false;
  std::vector<bool> seen(agents.size(), false);
  std::vector<int> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    for (const auto& [a, b] : edges) {
      const int other = a == n ? b : (b == n ? a : -1);
      if (other >= 0 && !seen[other]) {
        seen[other] = true;
        stack.push_back(other);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
}

int Topology::node_of(AgentRole role) const {
  for (int i = 0; i < size(); ++i)
    if (agents[i] == role) return i;
  return -1;
}

Topology build_ring_topology(const std::vector<AgentRole>& agent_ids, bool include_wrist) {
  Topology t;
  t.include_wrist = include_wrist;
  std::vector<AgentRole> fingers;
  bool has_wrist = false;
  for (AgentRole r : agent_ids) {
    if (r == AgentRole::Wrist)
      has_wrist = true;
    else
      fingers.push_back(r);
  }
  std::sort(fingers.begin(), fingers.end());
  fingers.erase(std::unique(fingers.begin(), fingers.end()), fingers.end());
  if (include_wrist && has_wrist) t.agents.push_back(AgentRole::Wrist);
  const int first_finger = static_cast<int>(t.agents.size());
  t.agents.insert(t.agents.end(), fingers.begin(), fingers.end());
  if (t.size() < 3 || fingers.size() < 2) throw ConfigError("information sharing needs at least three participating agents");

  const int n = static_cast<int>(fingers.size());
  if (n == 2) {
    t.edges.emplace_back(first_finger, first_finger + 1);
  } else {
    for (int k = 0; k < n; ++k) t.edges.emplace_back(first_finger + k, first_finger + (k + 1) % n);
  }
  if (first_finger == 1) {
    const int thumb = t.node_of(AgentRole::Thumb);
    const int index = t.node_of(AgentRole::Index);
    const int a = thumb >= 0 ? thumb : first_finger;
    const int b = index >= 0 ? index : first_finger + 1;
    t.edges.emplace_back(0, a);
    if (b != a) t.edges.emplace_back(0, b);
  }
  return t;
}

MixingMatrix metropolis_weights(const Topology& topology) {
  if (!topology.connected()) throw ConfigError("mixing matrix needs a connected topology");
  const int n = topology.size();
  MixingMatrix m{Eigen::MatrixXd::Zero(n, n), topology};
  for (const auto& [a, b] : topology.edges) {
    const double w = 1.0 / (1.0 + std::max(topology.degree(a), topology.degree(b)));
    m.weights(a, b) = w;
    m.weights(b, a) = w;
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) off += m.weights(i, j);
    m.weights(i, i) = 1.0 - off;
  }
  return m;
}

bool validate(const MixingMatrix& m, double tol) {
  const auto& w = m.weights;
  const Eigen::Index n = w.rows();
  if (w.cols() != n) return false;
  if (m.topology.size() != 0 && m.topology.size() != n) return false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(w.row(i).sum() - 1.0) > tol || std::abs(w.col(i).sum() - 1.0) > tol) return false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::isfinite(w(i, j)) || w(i, j) < -tol) return false;
      if (std::abs(w(i, j) - w(j, i)) > tol) return false;
      if (i != j && w(i, j) > tol && !m.topology.has_edge(static_cast<int>(i), static_cast<int>(j))) return false;
    }
  }
  return true;
}

std::vector<std::vector<double>> share(const std::vector<std::vector<double>>& params, const MixingMatrix& m) {
  const std::size_t n = params.size();
  FMSR_REQUIRE(static_cast<Eigen::Index>(n) == m.weights.rows(), "one parameter vector per mixing-matrix node expected");
  if (n == 0) return {};
  const std::size_t len = params.front().size();
  for (const auto& p : params) FMSR_REQUIRE(p.size() == len, "shared parameter vectors must have equal length");
  std::vector<std::vector<double>> out(n, std::vector<double>(len, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double w = m.weights(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      if (w == 0.0) continue;
      for (std::size_t k = 0; k < len; ++k) out[i][k] += w * params[j][k];
    }
  }
  return out;
}

double second_largest_eigenvalue_modulus(const MixingMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.weights);
  std::vector<double> mods;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) mods.push_back(std::abs(solver.eigenvalues()(i)));
  std::sort(mods.rbegin(), mods.rend());
  return mods.size() > 1 ? mods[1] : 0.0;
}

}  // namespace fmsr

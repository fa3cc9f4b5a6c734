#pragma once

// Independent reference computations for the tests. Nothing here calls into
// fmsr numerics: plain loops over std::vector, no Eigen decompositions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;  // row-major

constexpr double kPi = 3.14159265358979323846;

/// (-pi, pi] by repeated shifting.
inline double wrap(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a <= -kPi) a += 2.0 * kPi;
  return a;
}

/// Singular values of a rows x cols matrix (rows <= cols) by one-sided
/// Jacobi rotations on the rows, sorted descending.
inline std::vector<double> singular_values(Mat a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t k = 0; k < a[p].size(); ++k) {
          alpha += a[p][k] * a[p][k];
          beta += a[q][k] * a[q][k];
          gamma += a[p][k] * a[q][k];
        }
        if (std::abs(gamma) <= 1e-300) continue;
        off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
        for (std::size_t k = 0; k < a[p].size(); ++k) {
          const double x = a[p][k], y = a[q][k];
          a[p][k] = c * x - s * y;
          a[q][k] = s * x + c * y;
        }
      }
    }
    if (off < 1e-15) break;
  }
  std::vector<double> s;
  for (const auto& row : a) {
    double sq = 0.0;
    for (double v : row) sq += v * v;
    s.push_back(std::sqrt(sq));
  }
  std::sort(s.rbegin(), s.rend());
  return s;
}

/// det(A A^T) for a 3 x m matrix, by cofactor expansion of the 3 x 3 Gram.
inline double gram_det3(const Mat& a) {
  double g[3][3] = {};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < a[i].size(); ++k) g[i][j] += a[i][k] * a[j][k];
  return g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
         g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
}

/// Discounted visit counts sum_episodes sum_t gamma^t [(s_t, a_t) = (s, a)].
inline std::map<std::pair<int, int>, double> discounted_counts(
    const std::vector<std::vector<std::pair<int, int>>>& episodes, double gamma) {
  std::map<std::pair<int, int>, double> out;
  for (const auto& ep : episodes) {
    double g = 1.0;
    for (const auto& sa : ep) {
      out[sa] += g;
      g *= gamma;
    }
  }
  return out;
}

/// Small counter generator for test fixtures, independent of fmsr::SplitMix64.
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed) : s_(seed * 2862933555777941757ULL + 3037000493ULL) {}
  std::uint64_t next() {
    s_ = s_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return s_ >> 11;
  }
  double uniform() { return static_cast<double>(next() & ((1ULL << 53) - 1)) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

 private:
  std::uint64_t s_;
};

}  // namespace oracle

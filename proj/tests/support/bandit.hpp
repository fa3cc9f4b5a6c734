#pragma once

// One-dimensional Gaussian-policy bandit: a ~ N(theta, sigma^2), known
// Q(a) = -(a - a_star)^2. The score-function gradient of alpha * E[Q] has
// the closed form -2 alpha (theta - a_star).

#include <cmath>

#include "fmsr/agents.hpp"
#include "fmsr/network.hpp"
#include "fmsr/rng.hpp"

namespace test {

struct BanditResult {
  double estimate = 0.0;
  double standard_error = 0.0;
  double exact = 0.0;
};

/// The estimate goes through score_function_cotangent and the actor's own
/// reverse pass: the actor is a 1 -> 1 affine map with weight 0 and bias
/// theta, so its bias gradient is the policy-mean gradient.
inline BanditResult gaussian_bandit(double theta, double sigma, double a_star, double alpha, int samples,
                                    std::uint64_t seed) {
  fmsr::NetworkSpec spec;
  spec.layer_sizes = {1, 1};
  spec.output_activation = fmsr::Activation::Identity;
  fmsr::Network actor(spec);
  const auto& layer = actor.layout().layers[0];
  actor.params()[layer.weight_offset] = 0.0;
  actor.params()[layer.bias_offset] = theta;

  const Eigen::MatrixXd obs = Eigen::MatrixXd::Zero(1, samples);
  const Eigen::MatrixXd mu = actor.forward_batch(obs);
  Eigen::MatrixXd raw(1, samples);
  Eigen::VectorXd q(samples);
  fmsr::SplitMix64 rng(seed);
  for (int k = 0; k < samples; ++k) {
    raw(0, k) = theta + sigma * rng.normal();
    q(k) = -(raw(0, k) - a_star) * (raw(0, k) - a_star);
  }
  // Every sample is a one-step episode: discount 1, averaged over episodes.
  const Eigen::MatrixXd cot = fmsr::score_function_cotangent(raw, mu, q, sigma, alpha / samples);
  BanditResult r;
  r.estimate = actor.gradient_batch(obs, cot).params[layer.bias_offset];

  // Standard error from the per-sample terms, computed directly.
  double mean = 0.0, sq = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double g = alpha * q(k) * (raw(0, k) - theta) / (sigma * sigma);
    mean += g;
    sq += g * g;
  }
  mean /= samples;
  const double var = sq / samples - mean * mean;
  r.standard_error = std::sqrt(var / samples);
  r.exact = -2.0 * alpha * (theta - a_star);
  return r;
}

}  // namespace test

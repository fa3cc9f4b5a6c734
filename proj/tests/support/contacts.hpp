#pragma once

// Hand-built contact reports for the grasp-measure tests.

#include <cmath>
#include <vector>

#include "fmsr/planar_hand_env.hpp"
#include "oracles.hpp"

namespace test {

inline fmsr::Contact contact_at(Eigen::Vector2d p, Eigen::Vector2d n, int sensor) {
  fmsr::Contact c;
  c.position = p;
  c.unit_normal = n.normalized();
  c.normal_force = 1.0;
  c.sensor = sensor;
  return c;
}

inline fmsr::ContactReport report_of(std::vector<fmsr::Contact> cs) {
  fmsr::ContactReport r;
  r.sensor_activations.assign(92, false);
  for (auto& c : cs) r.sensor_activations[c.sensor] = true;
  r.contact_count = static_cast<int>(cs.size());
  r.contacts = std::move(cs);
  return r;
}

inline fmsr::ContactReport random_report(oracle::Lcg& rng, int n, Eigen::Vector2d center) {
  std::vector<fmsr::Contact> cs;
  for (int k = 0; k < n; ++k) {
    const double a = rng.uniform(-oracle::kPi, oracle::kPi), r = rng.uniform(0.005, 0.03);
    const Eigen::Vector2d p = center + r * Eigen::Vector2d(std::cos(a), std::sin(a));
    cs.push_back(contact_at(p, center - p + Eigen::Vector2d(rng.uniform(-0.003, 0.003), 0.0), k));
  }
  return report_of(cs);
}

inline Eigen::Vector2d rotate(const Eigen::Vector2d& v, double a) {
  return {std::cos(a) * v.x() - std::sin(a) * v.y(), std::sin(a) * v.x() + std::cos(a) * v.y()};
}

}  // namespace test

#pragma once

#include <cmath>
#include <random>

#include "ambipose/liegroups.hpp"

namespace ambipose::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vector3 random_vector(Rng& rng, double scale = 1.0) {
  return Vector3(uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale));
}

inline Rotation random_rotation(Rng& rng) {
  Eigen::Vector4d v;
  std::normal_distribution<double> n;
  for (int i = 0; i < 4; ++i) v[i] = n(rng);
  v.normalize();
  return Rotation(v[0], v[1], v[2], v[3]);
}

inline Pose random_pose(Rng& rng, double translation = 1.0) {
  return Pose(random_rotation(rng), random_vector(rng, translation));
}

inline double rotation_distance(const Rotation& a, const Rotation& b) { return (a.inverse() * b).angle(); }

inline double translation_distance(const Pose& a, const Pose& b) {
  return (a.translation() - b.translation()).norm();
}

}  // namespace ambipose::testing

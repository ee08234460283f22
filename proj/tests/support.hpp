#pragma once

// Shared generators and reference implementations for the test suite. The
// references deliberately avoid the library's own formulas.

#include <Eigen/Geometry>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "goikit/camera.hpp"
#include "goikit/curvature.hpp"
#include "goikit/lie.hpp"

namespace testing_support {

using namespace goikit;

struct Gen {
  std::mt19937_64 eng;
  explicit Gen(std::uint64_t seed) : eng(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng); }

  Vec3 vec3(double scale = 1.0) { return scale * Vec3(normal(), normal(), normal()); }
  Vec6 vec6(double scale = 1.0) {
    Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = scale * normal();
    return v;
  }
  Vec3 unit() { return vec3().normalized(); }

  Mat3 rotation(double max_angle) {
    return Eigen::AngleAxisd(uniform(0.0, max_angle), unit()).toRotationMatrix();
  }
  Pose pose(double max_angle = 1.0, double max_offset = 1.0) {
    return Pose(rotation(max_angle), vec3(max_offset));
  }
  // World point in front of camera g, depth in [dmin, dmax].
  Vec3 point_in_front(const Pose& g, double dmin = 1.0, double dmax = 10.0) {
    const double depth = uniform(dmin, dmax);
    const Vec3 y(uniform(-0.5, 0.5) * depth, uniform(-0.5, 0.5) * depth, depth);
    return g.R() * y + g.t();
  }
  Mat6 spd(double floor = 0.5) {
    Mat6 A;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) A(i, j) = normal();
    }
    Mat6 G = A * A.transpose() / 6.0 + floor * Mat6::Identity();
    return 0.5 * (G + G.transpose());
  }
  Mat6 symmetric() {
    Mat6 A;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) A(i, j) = normal();
    }
    return 0.5 * (A + A.transpose());
  }
};

// 4x4 twist matrix [hat(omega) nu; 0 0], exponentiated by Eigen's Pade routine.
inline Mat4 twist_matrix(const Vec6& xi) {
  Mat4 M = Mat4::Zero();
  M(0, 1) = -xi[5];
  M(0, 2) = xi[4];
  M(1, 0) = xi[5];
  M(1, 2) = -xi[3];
  M(2, 0) = -xi[4];
  M(2, 1) = xi[3];
  M.block<3, 1>(0, 3) = xi.head<3>();
  return M;
}
inline Mat4 expm_reference(const Vec6& xi) { return twist_matrix(xi).exp(); }

inline Vec2 project_reference(const Vec3& x) { return {x.x() / x.z(), x.y() / x.z()}; }

// Residual z - pi(g^{-1} X) through 4x4 homogeneous matrices.
inline Vec2 residual_reference(const Vec2& z, const Mat4& g, const Vec3& X) {
  const Eigen::Vector4d y = g.inverse() * Eigen::Vector4d(X.x(), X.y(), X.z(), 1.0);
  return z - project_reference(y.head<3>());
}

// Central differences of xi -> residual(z, exp(xi) g, X).
inline Mat26 fd_jacobian(const Pose& g, const Vec3& X, double h = 1e-6) {
  const Vec2 z = Vec2::Zero();
  Mat26 J;
  for (int c = 0; c < 6; ++c) {
    Vec6 e = Vec6::Zero();
    e[c] = h;
    const Vec2 rp = residual_reference(z, expm_reference(e) * g.matrix(), X);
    const Vec2 rm = residual_reference(z, expm_reference(-e) * g.matrix(), X);
    J.col(c) = (rp - rm) / (2.0 * h);
  }
  return J;
}

// n landmarks in front of g with their exact projections.
inline ObservationSet noiseless_scene(Gen& gen, const Pose& g, int n, double dmin = 2.0,
                                      double dmax = 10.0, double sigma = 1e-2) {
  ObservationSet set;
  set.noise = NoiseModel::isotropic(sigma);
  for (int i = 0; i < n; ++i) {
    const Vec3 X = gen.point_in_front(g, dmin, dmax);
    set.landmarks.push_back(X);
    set.observations.push_back({project(act_inverse(g, X)), static_cast<std::size_t>(i)});
  }
  return set;
}

}  // namespace testing_support

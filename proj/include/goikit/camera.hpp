#pragma once

// Calibrated pinhole camera in normalized image coordinates.
//
// The reprojection residual is r(z, g) = z - pi(g^{-1} X) and its Jacobian is
// taken with respect to a left perturbation exp(xi) g at xi = 0. Because z
// enters r additively, the Jacobian depends only on (g, X).

#include <cstddef>

#include "goikit/lie.hpp"
#include "goikit/random.hpp"

namespace goikit {

/// Smallest admissible camera-frame depth; points at or behind it are rejected.
inline constexpr double kDepthMin = 1e-6;

using Landmark = Vec3;

struct Observation {
  Vec2 z = Vec2::Zero();
  std::size_t landmark_id = 0;
};

/// Gaussian image noise N(0, Sigma) and its weight W = Sigma^{-1}.
class NoiseModel {
 public:
  /// Throws ConfigError unless Sigma is symmetric positive definite.
  explicit NoiseModel(const Mat2& Sigma);
  /// Sigma = sigma^2 I.
  static NoiseModel isotropic(double sigma);

  const Mat2& Sigma() const { return Sigma_; }
  const Mat2& W() const { return W_; }

  /// One draw of eta ~ N(0, Sigma).
  Vec2 sample(RngStream& rng) const;

 private:
  Mat2 Sigma_;
  Mat2 W_;
  Mat2 L_;  // Sigma = L L^T
};

/// (x1/x3, x2/x3). Throws DomainError when x3 <= kDepthMin.
Vec2 project(const Vec3& x);

/// Differential of project at x.
Mat23 dproject(const Vec3& x);

Vec2 residual(const Vec2& z, const Pose& g, const Landmark& X);
inline Vec2 residual(const Observation& obs, const Pose& g, const Landmark& X) {
  return residual(obs.z, g, X);
}

/// d/dxi [z - pi((exp(xi) g)^{-1} X)] at xi = 0, laid out as [J_t  J_r].
Mat26 jacobian(const Pose& g, const Landmark& X);

/// z = pi(g*^{-1} X) + eta with eta drawn from the stream.
Observation sample_observation(const Pose& g_star, const Landmark& X,
                               const NoiseModel& noise, RngStream& rng,
                               std::size_t landmark_id = 0);

}  // namespace goikit

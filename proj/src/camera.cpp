#include "goikit/camera.hpp"

#include <cmath>

#include "goikit/errors.hpp"

namespace goikit {

NoiseModel::NoiseModel(const Mat2& Sigma) : Sigma_(Sigma) {
  if (!Sigma.allFinite() || std::abs(Sigma(0, 1) - Sigma(1, 0)) > 1e-15 * Sigma.norm()) {
    throw ConfigError("noise covariance is not symmetric");
  }
  Eigen::LLT<Mat2> llt(Sigma);
  if (llt.info() != Eigen::Success || Sigma.determinant() <= 0.0) {
    throw ConfigError("noise covariance is not positive definite");
  }
  L_ = llt.matrixL();
  W_ = Sigma.inverse();
  W_ = 0.5 * (W_ + W_.transpose());
}

NoiseModel NoiseModel::isotropic(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("noise sigma must be positive");
  return NoiseModel(sigma * sigma * Mat2::Identity());
}

Vec2 NoiseModel::sample(RngStream& rng) const {
  const double a = rng.normal();
  const double b = rng.normal();
  return L_ * Vec2(a, b);
}

Vec2 project(const Vec3& x) {
  if (!(x.z() > kDepthMin)) {
    throw DomainError("project: point depth below depth_min (cheirality)");
  }
  return {x.x() / x.z(), x.y() / x.z()};
}

Mat23 dproject(const Vec3& x) {
  if (!(x.z() > kDepthMin)) {
    throw DomainError("dproject: point depth below depth_min (cheirality)");
  }
  const double iz = 1.0 / x.z();
  Mat23 D;
  D << iz, 0.0, -x.x() * iz * iz,  //
      0.0, iz, -x.y() * iz * iz;
  return D;
}

Vec2 residual(const Vec2& z, const Pose& g, const Landmark& X) {
  return z - project(act_inverse(g, X));
}

// y(xi) = g^{-1} exp(-xi) X, so dy/dnu = -R^T and dy/domega = R^T [X]x.
// With r = z - pi(y), J = -dpi(y) dy/dxi = [A, -A [X]x] where A = dpi(y) R^T.
Mat26 jacobian(const Pose& g, const Landmark& X) {
  const Mat23 A = dproject(act_inverse(g, X)) * g.R().transpose();
  Mat26 J;
  J.leftCols<3>() = A;
  J.rightCols<3>() = -A * hat(X);
  return J;
}

Observation sample_observation(const Pose& g_star, const Landmark& X,
                               const NoiseModel& noise, RngStream& rng,
                               std::size_t landmark_id) {
  const Vec2 clean = project(act_inverse(g_star, X));
  return {clean + noise.sample(rng), landmark_id};
}

}  // namespace goikit

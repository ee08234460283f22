#include "goikit/lie.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "goikit/errors.hpp"

namespace goikit {

namespace {

constexpr double kRotationTol = 1e-9;
constexpr double kSmallAngle = 1e-4;
constexpr double kLogAngleLimit = std::numbers::pi - 1e-6;

// Rodrigues coefficients sin(t)/t, (1-cos t)/t^2, (t - sin t)/t^3.
struct RodriguesCoeffs {
  double a, b, c;
};

RodriguesCoeffs rodrigues(double theta) {
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    return {1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0};
  }
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  return {s / theta, (1.0 - c) / t2, (theta - s) / (t2 * theta)};
}

}  // namespace

Pose::Pose() : R_(Mat3::Identity()), t_(Vec3::Zero()) {}

Pose::Pose(const Mat3& R, const Vec3& t) : R_(R), t_(t) {
  if (!R.allFinite() || !t.allFinite()) {
    throw ConfigError("pose has non-finite entries");
  }
  if (orthogonality_error() > kRotationTol ||
      std::abs(R.determinant() - 1.0) > kRotationTol) {
    throw ConfigError("pose rotation is not in SO(3)");
  }
}

Pose Pose::from_trusted(const Mat3& R, const Vec3& t) {
  return Pose(R, t, Trusted{});
}

Mat4 Pose::matrix() const {
  Mat4 T = Mat4::Identity();
  T.topLeftCorner<3, 3>() = R_;
  T.topRightCorner<3, 1>() = t_;
  return T;
}

double Pose::orthogonality_error() const {
  return (R_.transpose() * R_ - Mat3::Identity()).norm();
}

Metric::Metric() : G_(Mat6::Identity()), llt_(G_) {}

Metric::Metric(const Mat6& G) : G_(G) {
  if (!G.allFinite() || (G - G.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ConfigError("metric G is not symmetric");
  }
  llt_.compute(G_);
  if (llt_.info() != Eigen::Success) {
    throw ConfigError("metric G is not positive definite");
  }
}

Mat3 hat(const Vec3& w) {
  Mat3 W;
  W << 0.0, -w.z(), w.y(),  //
      w.z(), 0.0, -w.x(),   //
      -w.y(), w.x(), 0.0;
  return W;
}

Vec3 vee(const Mat3& W) { return {W(2, 1), W(0, 2), W(1, 0)}; }

Pose exp_se3(const Twist& xi) {
  const Vec3 nu = translational(xi);
  const Vec3 omega = rotational(xi);
  const Mat3 W = hat(omega);
  const Mat3 W2 = W * W;
  const auto k = rodrigues(omega.norm());
  const Mat3 R = Mat3::Identity() + k.a * W + k.b * W2;
  const Mat3 V = Mat3::Identity() + k.b * W + k.c * W2;
  return Pose::from_trusted(R, V * nu);
}

Twist log_se3(const Pose& g) {
  const Mat3& R = g.R();
  const Vec3 axis_sin = 0.5 * vee(R - R.transpose());  // sin(theta) * axis
  const double cos_theta = 0.5 * (R.trace() - 1.0);
  const double theta = std::atan2(axis_sin.norm(), cos_theta);
  if (theta > kLogAngleLimit) {
    throw DomainError("log_se3: rotation angle at pi is out of domain");
  }

  Vec3 omega;
  double v_inv_coeff;  // (1 - a / (2 b)) / theta^2
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    omega = (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) * axis_sin;
    v_inv_coeff = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    omega = (theta / std::sin(theta)) * axis_sin;
    const auto k = rodrigues(theta);
    v_inv_coeff = (1.0 - k.a / (2.0 * k.b)) / (theta * theta);
  }
  const Mat3 W = hat(omega);
  const Mat3 V_inv = Mat3::Identity() - 0.5 * W + v_inv_coeff * W * W;
  return make_twist(V_inv * g.t(), omega);
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose::from_trusted(a.R() * b.R(), a.R() * b.t() + a.t());
}

Pose inverse(const Pose& g) {
  const Mat3 Rt = g.R().transpose();
  return Pose::from_trusted(Rt, -(Rt * g.t()));
}

Vec3 act(const Pose& g, const Vec3& X) { return g.R() * X + g.t(); }

Vec3 act_inverse(const Pose& g, const Vec3& X) {
  return g.R().transpose() * (X - g.t());
}

Pose left_update(const Pose& g, const Twist& xi) {
  return compose(exp_se3(xi), g);
}

double g_inner(const Twist& u, const Twist& v, const Metric& G) {
  return u.dot(G.matrix() * v);
}

double g_norm(const Twist& u, const Metric& G) {
  return std::sqrt(std::max(0.0, g_inner(u, u, G)));
}

}  // namespace goikit

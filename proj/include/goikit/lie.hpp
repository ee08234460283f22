#pragma once

// SE(3)/se(3) calculus with left-multiplicative perturbations g(xi) = exp(xi) g.
//
// Twists are stored translation-first: components 0..2 are the translational
// part nu, components 3..5 the rotational part omega. Every 6-vector and 6x6
// block in the library follows this ordering.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>

namespace goikit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat26 = Eigen::Matrix<double, 2, 6>;
using Mat23 = Eigen::Matrix<double, 2, 3>;

/// Element of se(3) in left-trivialized coordinates, (nu, omega).
using Twist = Vec6;

inline Twist make_twist(const Vec3& nu, const Vec3& omega) {
  Twist xi;
  xi << nu, omega;
  return xi;
}
inline Vec3 translational(const Twist& xi) { return xi.head<3>(); }
inline Vec3 rotational(const Twist& xi) { return xi.tail<3>(); }

/// Rigid transform g = (R, t). Acts on points as g X = R X + t.
class Pose {
 public:
  /// Identity transform.
  Pose();
  /// Throws ConfigError unless R is a rotation (R^T R = I and det R = 1,
  /// both within 1e-9) and every entry is finite.
  Pose(const Mat3& R, const Vec3& t);

  static Pose identity() { return {}; }
  /// Skips the rotation check; for values produced by group operations.
  static Pose from_trusted(const Mat3& R, const Vec3& t);

  const Mat3& R() const { return R_; }
  const Vec3& t() const { return t_; }

  /// 4x4 homogeneous matrix.
  Mat4 matrix() const;

  /// Frobenius norm of R^T R - I.
  double orthogonality_error() const;

 private:
  struct Trusted {};
  Pose(const Mat3& R, const Vec3& t, Trusted) : R_(R), t_(t) {}

  Mat3 R_;
  Vec3 t_;
};

/// Symmetric positive-definite inner product on se(3).
class Metric {
 public:
  /// G = I6.
  Metric();
  /// Throws ConfigError if G is not symmetric (1e-12) or not positive definite.
  explicit Metric(const Mat6& G);

  static Metric identity() { return {}; }

  const Mat6& matrix() const { return G_; }
  const Eigen::LLT<Mat6>& cholesky() const { return llt_; }

  /// G^{-1} v; maps a score covector to its se(3) representer.
  Vec6 solve(const Vec6& v) const { return llt_.solve(v); }

 private:
  Mat6 G_;
  Eigen::LLT<Mat6> llt_;
};

Mat3 hat(const Vec3& omega);
Vec3 vee(const Mat3& Omega);

Pose exp_se3(const Twist& xi);

/// Inverse of exp_se3. Throws DomainError when the rotation angle is within
/// 1e-6 of pi, where the logarithm is not unique.
Twist log_se3(const Pose& g);

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& g);

/// g X = R X + t.
Vec3 act(const Pose& g, const Vec3& X);
/// g^{-1} X = R^T (X - t).
Vec3 act_inverse(const Pose& g, const Vec3& X);

/// exp(xi) g.
Pose left_update(const Pose& g, const Twist& xi);

double g_inner(const Twist& u, const Twist& v, const Metric& G);
double g_norm(const Twist& u, const Metric& G);

}  // namespace goikit

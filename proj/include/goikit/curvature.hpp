#pragma once

// Score, curvature and the G-metric spectral machinery.
//
// The curvature H (population or empirical) is a symmetric PSD 6x6 matrix.
// Its "G-eigenpairs" are the solutions of the symmetric-definite generalized
// problem H v = lambda G v, which makes H self-adjoint in <u, v>_G = u^T G v.
//
// The score psi = J^T W r is a covector: it pairs with twists through the
// Euclidean dot product. score_representer() maps it into se(3) through
// G^{-1}, and that representer is what project_observable() and the
// restricted inverse act on. With this convention H_OO^{-1} P_O G^{-1} psi
// equals H^{-1} psi whenever H is full rank, for every metric G.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "goikit/camera.hpp"
#include "goikit/lie.hpp"

namespace goikit {

inline constexpr double kDefaultRankThreshold = 1e-10;
inline constexpr double kRankAbsFloor = 1e-14;

struct ObservationSet {
  std::vector<Observation> observations;
  std::vector<Landmark> landmarks;
  NoiseModel noise = NoiseModel(Mat2::Identity());
  /// Ground-truth dynamic flags, one per observation (simulation only).
  std::optional<std::vector<bool>> dynamic_labels;

  std::size_t size() const { return observations.size(); }
  const Landmark& landmark_of(std::size_t i) const {
    return landmarks[observations[i].landmark_id];
  }
  /// Throws ConfigError on dangling landmark ids, an empty set, or a label
  /// vector of the wrong length.
  void validate() const;
};

class CurvatureSpectrum {
 public:
  const Mat6& H() const { return H_; }
  const Metric& G() const { return G_; }
  /// Ascending; clamped at zero.
  const Vec6& eigenvalues() const { return lambda_; }
  /// Column i is v_i. G-orthonormal unless rescaled().
  const Mat6& eigenvectors() const { return V_; }
  /// Observable indices, ascending (so front() has the smallest eigenvalue).
  const std::vector<int>& observable() const { return observable_; }
  double rank_threshold() const { return rank_threshold_; }

  double lambda(int i) const { return lambda_[i]; }
  Twist vector(int i) const { return V_.col(i); }
  bool is_observable(int i) const;
  bool empty() const { return observable_.empty(); }
  /// True when O was supplied explicitly rather than taken as range(H).
  bool has_override() const { return override_; }

  /// Index of the smallest observable eigenvalue. Throws UnobservableError.
  int weakest_index() const;
  double lambda_min() const { return lambda_[weakest_index()]; }

  /// Same spectrum with v_i multiplied by factors[i] (> 0).
  CurvatureSpectrum rescaled(const Vec6& factors) const;

 private:
  friend CurvatureSpectrum g_eigendecompose(const Mat6&, const Metric&, double);
  friend CurvatureSpectrum g_eigendecompose_on(const Mat6&, const Metric&,
                                               const Eigen::MatrixXd&, double);
  CurvatureSpectrum(const Mat6& H, const Metric& G) : H_(H), G_(G) {}

  Mat6 H_;
  Metric G_;
  Vec6 lambda_ = Vec6::Zero();
  Mat6 V_ = Mat6::Identity();
  std::vector<int> observable_;
  double rank_threshold_ = kDefaultRankThreshold;
  bool override_ = false;
};

/// J(g, X)^T W r(z, g, X).
Twist score(const Vec2& z, const Pose& g, const Landmark& X, const Mat2& W);

/// G^{-1} psi.
Twist score_representer(const Twist& psi, const Metric& G);

/// (1/n) sum_i J_i^T W J_i over the observations of `set` at pose g.
Mat6 empirical_curvature(const ObservationSet& set, const Pose& g);

/// (1/n) sum_j J(g*, X_j)^T W J(g*, X_j); exact for a finite landmark population.
Mat6 population_curvature(std::span<const Landmark> landmarks, const Pose& g_star,
                          const Mat2& W);

/// Solves H v = lambda G v. I_O = {i : lambda_i > rank_threshold * max(lambda_max, 1e-14)}.
/// Throws ConfigError if H is not finite.
CurvatureSpectrum g_eigendecompose(const Mat6& H, const Metric& G,
                                   double rank_threshold = kDefaultRankThreshold);

/// Spectrum with an explicit observable subspace O = span(columns of `basis`).
/// H is diagonalized separately on O and on its G-orthogonal complement; I_O
/// holds the O-block eigenpairs above the rank threshold.
CurvatureSpectrum g_eigendecompose_on(const Mat6& H, const Metric& G,
                                      const Eigen::MatrixXd& basis,
                                      double rank_threshold = kDefaultRankThreshold);

/// P_O psi = sum_{i in I_O} v_i <psi, v_i>_G / ||v_i||_G^2.
Twist project_observable(const Twist& psi, const CurvatureSpectrum& spec);

/// psi_i = <P_O psi, v_i>_G / ||v_i||_G^2 for i in I_O; zero elsewhere.
Vec6 spectral_coefficients(const Twist& psi, const CurvatureSpectrum& spec);

/// sum_{i in I_O} (psi_i / lambda_i) v_i. Throws UnobservableError if I_O is empty.
Twist apply_restricted_inverse(const Twist& psi_O, const CurvatureSpectrum& spec);

/// Largest absolute eigenvalue of a symmetric matrix.
double symmetric_op_norm(const Eigen::MatrixXd& A);

}  // namespace goikit

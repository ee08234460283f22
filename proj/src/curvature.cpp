#include "goikit/curvature.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "goikit/errors.hpp"
#include "goikit/kernels.hpp"

namespace goikit {

void ObservationSet::validate() const {
  if (observations.empty()) throw ConfigError("observation set is empty");
  for (const auto& obs : observations) {
    if (obs.landmark_id >= landmarks.size()) {
      throw ConfigError("observation references a missing landmark");
    }
    if (!obs.z.allFinite()) throw ConfigError("observation has non-finite z");
  }
  for (const auto& X : landmarks) {
    if (!X.allFinite()) throw ConfigError("landmark has non-finite coordinates");
  }
  if (dynamic_labels && dynamic_labels->size() != observations.size()) {
    throw ConfigError("dynamic label count differs from observation count");
  }
}

bool CurvatureSpectrum::is_observable(int i) const {
  return std::find(observable_.begin(), observable_.end(), i) != observable_.end();
}

int CurvatureSpectrum::weakest_index() const {
  if (observable_.empty()) {
    throw UnobservableError("curvature spectrum has no observable directions");
  }
  return observable_.front();
}

CurvatureSpectrum CurvatureSpectrum::rescaled(const Vec6& factors) const {
  if ((factors.array() <= 0.0).any()) {
    throw ContractError("eigenvector scale factors must be positive");
  }
  CurvatureSpectrum out = *this;
  out.V_ = V_ * factors.asDiagonal();
  return out;
}

Twist score(const Vec2& z, const Pose& g, const Landmark& X, const Mat2& W) {
  return jacobian(g, X).transpose() * (W * residual(z, g, X));
}

Twist score_representer(const Twist& psi, const Metric& G) { return G.solve(psi); }

namespace {

Mat6 averaged_curvature(const std::vector<double>& xs, const std::vector<double>& ys,
                        const std::vector<double>& zs, const Pose& g, const Mat2& W) {
  kernels::Accumulator acc;
  kernels::accumulate_curvature(kernels::active_level(), g, W, {xs, ys, zs}, acc);
  return acc.curvature_matrix() / static_cast<double>(xs.size());
}

// Eigenpairs of the symmetric matrix M, ascending.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym_eig(const Eigen::MatrixXd& M) {
  const Eigen::MatrixXd S = 0.5 * (M + M.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S);
}

void check_finite(const Mat6& H) {
  if (!H.allFinite()) throw ConfigError("curvature matrix has non-finite entries");
}

}  // namespace

Mat6 empirical_curvature(const ObservationSet& set, const Pose& g) {
  set.validate();
  const std::size_t n = set.size();
  std::vector<double> xs(n), ys(n), zs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Landmark& X = set.landmark_of(i);
    xs[i] = X.x();
    ys[i] = X.y();
    zs[i] = X.z();
  }
  return averaged_curvature(xs, ys, zs, g, set.noise.W());
}

Mat6 population_curvature(std::span<const Landmark> landmarks, const Pose& g_star,
                          const Mat2& W) {
  if (landmarks.empty()) throw ConfigError("landmark population is empty");
  const std::size_t n = landmarks.size();
  std::vector<double> xs(n), ys(n), zs(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = landmarks[i].x();
    ys[i] = landmarks[i].y();
    zs[i] = landmarks[i].z();
  }
  return averaged_curvature(xs, ys, zs, g_star, W);
}

CurvatureSpectrum g_eigendecompose(const Mat6& H, const Metric& G, double rank_threshold) {
  check_finite(H);
  const Mat6 Hs = 0.5 * (H + H.transpose());
  // L^{-1} H L^{-T} u = lambda u with G = L L^T, then v = L^{-T} u.
  const auto& llt = G.cholesky();
  const Mat6 L = llt.matrixL();
  const Mat6 C = L.triangularView<Eigen::Lower>().solve(
      L.triangularView<Eigen::Lower>().solve(Hs).transpose());
  const Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (C + C.transpose()));

  CurvatureSpectrum spec(Hs, G);
  spec.lambda_ = es.eigenvalues().cwiseMax(0.0);
  spec.V_ = L.transpose().triangularView<Eigen::Upper>().solve(es.eigenvectors());
  spec.rank_threshold_ = rank_threshold;
  const double cutoff = rank_threshold * std::max(spec.lambda_.maxCoeff(), kRankAbsFloor);
  for (int i = 0; i < 6; ++i) {
    if (spec.lambda_[i] > cutoff) spec.observable_.push_back(i);
  }
  return spec;
}

CurvatureSpectrum g_eigendecompose_on(const Mat6& H, const Metric& G,
                                      const Eigen::MatrixXd& basis, double rank_threshold) {
  check_finite(H);
  if (basis.rows() != 6 || basis.cols() < 1) {
    throw ConfigError("observable basis must have 6 rows and at least one column");
  }
  const Mat6& Gm = G.matrix();
  const Mat6 Hs = 0.5 * (H + H.transpose());

  // G-orthonormalize the spanning set, then extend with e_1..e_6 to get O^perp.
  Eigen::MatrixXd candidates(6, basis.cols() + 6);
  candidates << basis, Mat6::Identity();
  std::vector<Vec6> kept;
  int in_O = 0;
  for (int c = 0; c < candidates.cols() && kept.size() < 6; ++c) {
    Vec6 v = candidates.col(c);
    const double scale = std::sqrt(v.dot(Gm * v));
    if (scale == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : kept) v -= q * q.dot(Gm * v);
    }
    const double norm = std::sqrt(std::max(0.0, v.dot(Gm * v)));
    if (norm <= 1e-10 * scale) continue;
    kept.push_back(v / norm);
    if (c < basis.cols()) ++in_O;
  }
  if (in_O == 0) throw ConfigError("observable basis is numerically zero");

  Eigen::MatrixXd B(6, in_O), Bp(6, 6 - in_O);
  for (int i = 0; i < 6; ++i) (i < in_O ? B.col(i) : Bp.col(i - in_O)) = kept[i];

  struct Pair {
    double lambda;
    Vec6 v;
    bool in_O;
  };
  std::vector<Pair> pairs;
  const auto es_O = sym_eig(B.transpose() * Hs * B);
  for (int i = 0; i < in_O; ++i) {
    pairs.push_back({std::max(0.0, es_O.eigenvalues()[i]), B * es_O.eigenvectors().col(i), true});
  }
  if (in_O < 6) {
    const auto es_P = sym_eig(Bp.transpose() * Hs * Bp);
    for (int i = 0; i < 6 - in_O; ++i) {
      pairs.push_back(
          {std::max(0.0, es_P.eigenvalues()[i]), Bp * es_P.eigenvectors().col(i), false});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.lambda < b.lambda; });

  CurvatureSpectrum spec(Hs, G);
  spec.override_ = true;
  spec.rank_threshold_ = rank_threshold;
  double lambda_max = 0.0;
  for (const auto& p : pairs) {
    if (p.in_O) lambda_max = std::max(lambda_max, p.lambda);
  }
  const double cutoff = rank_threshold * std::max(lambda_max, kRankAbsFloor);
  for (int i = 0; i < 6; ++i) {
    spec.lambda_[i] = pairs[i].lambda;
    spec.V_.col(i) = pairs[i].v;
    if (pairs[i].in_O && pairs[i].lambda > cutoff) spec.observable_.push_back(i);
  }
  return spec;
}

Twist project_observable(const Twist& psi, const CurvatureSpectrum& spec) {
  const Mat6& Gm = spec.G().matrix();
  const Vec6 Gpsi = Gm * psi;
  Twist out = Twist::Zero();
  for (int i : spec.observable()) {
    const Vec6 v = spec.vector(i);
    out += v * (v.dot(Gpsi) / v.dot(Gm * v));
  }
  return out;
}

Vec6 spectral_coefficients(const Twist& psi, const CurvatureSpectrum& spec) {
  const Mat6& Gm = spec.G().matrix();
  const Vec6 G_psi_O = Gm * project_observable(psi, spec);
  Vec6 c = Vec6::Zero();
  for (int i : spec.observable()) {
    const Vec6 v = spec.vector(i);
    c[i] = v.dot(G_psi_O) / v.dot(Gm * v);
  }
  return c;
}

Twist apply_restricted_inverse(const Twist& psi_O, const CurvatureSpectrum& spec) {
  if (spec.empty()) {
    throw UnobservableError("restricted inverse: observable subspace is empty");
  }
  const Vec6 c = spectral_coefficients(psi_O, spec);
  Twist out = Twist::Zero();
  for (int i : spec.observable()) out += (c[i] / spec.lambda(i)) * spec.vector(i);
  return out;
}

double symmetric_op_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  return sym_eig(A).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace goikit

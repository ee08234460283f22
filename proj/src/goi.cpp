#include "goikit/goi.hpp"

#include <algorithm>
#include <cmath>

#include "goikit/errors.hpp"

namespace goikit {

namespace {

double g_norm_sq(const Twist& v, const Metric& G) { return v.dot(G.matrix() * v); }

Twist restricted_influence_of(const Twist& psi, const CurvatureSpectrum& spec) {
  const Twist psi_O = project_observable(score_representer(psi, spec.G()), spec);
  return -apply_restricted_inverse(psi_O, spec);
}

}  // namespace

InfluenceReport influence_from_score(const Twist& psi, const CurvatureSpectrum& spec,
                                     std::size_t feature_id) {
  if (spec.empty()) {
    throw UnobservableError("influence: observable subspace is empty");
  }
  InfluenceReport rep;
  rep.feature_id = feature_id;
  rep.psi = psi;
  rep.psi_O = project_observable(score_representer(psi, spec.G()), spec);
  rep.coefficients = spectral_coefficients(rep.psi_O, spec);
  rep.IF = -apply_restricted_inverse(rep.psi_O, spec);
  rep.goi = g_norm(rep.IF, spec.G());
  double sum = 0.0;
  for (int i : spec.observable()) {
    const double ratio = rep.coefficients[i] / spec.lambda(i);
    rep.per_direction[i] = ratio * ratio * g_norm_sq(spec.vector(i), spec.G());
    sum += rep.per_direction[i];
  }
  rep.goi_spectral = std::sqrt(sum);
  rep.rho1 = alignment_rho1(rep.coefficients, spec);
  return rep;
}

InfluenceReport influence(const Vec2& z, const Pose& g_star, const Landmark& X,
                          const CurvatureSpectrum& spec, const Mat2& W,
                          std::size_t feature_id) {
  return influence_from_score(score(z, g_star, X, W), spec, feature_id);
}

std::vector<InfluenceReport> influence_all(const ObservationSet& set, const Pose& g,
                                           const CurvatureSpectrum& spec) {
  set.validate();
  std::vector<InfluenceReport> out;
  out.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    out.push_back(
        influence(set.observations[i].z, g, set.landmark_of(i), spec, set.noise.W(), i));
  }
  return out;
}

double goi_spectral(const Vec6& coefficients, const CurvatureSpectrum& spec) {
  double sum = 0.0;
  for (int i : spec.observable()) {
    const double ratio = coefficients[i] / spec.lambda(i);
    sum += ratio * ratio * g_norm_sq(spec.vector(i), spec.G());
  }
  return std::sqrt(sum);
}

// Coordinates against G-normalized eigenvectors, so rescaling v_i leaves rho1 alone.
double alignment_rho1(const Vec6& coefficients, const CurvatureSpectrum& spec) {
  if (spec.empty()) return 0.0;
  double energy = 0.0;
  for (int i : spec.observable()) {
    const double c = coefficients[i] * g_norm(spec.vector(i), spec.G());
    energy += c * c;
  }
  if (energy == 0.0) return 0.0;
  const int w = spec.weakest_index();
  const double rho = std::abs(coefficients[w]) * g_norm(spec.vector(w), spec.G()) / std::sqrt(energy);
  return std::min(rho, 1.0);
}

DynamicSplit dynamic_split(const Vec2& z, const Pose& g_star, const Landmark& X,
                           const CurvatureSpectrum& spec, const Mat2& W,
                           const Vec2& r_static, const Vec2& b_dynamic) {
  const Vec2 r = residual(z, g_star, X);
  const double scale = std::max(1.0, r.norm());
  if ((r - (r_static + b_dynamic)).norm() > 1e-12 * scale) {
    throw ContractError("dynamic_split: r_static + b_dynamic does not match the residual");
  }
  const Mat26 J = jacobian(g_star, X);
  const Twist psi_s = J.transpose() * (W * r_static);
  const Twist psi_b = J.transpose() * (W * b_dynamic);
  return {g_norm(restricted_influence_of(psi_s, spec), spec.G()),
          g_norm(restricted_influence_of(psi_b, spec), spec.G())};
}

double sensitivity_lower_bound(const InfluenceReport& report, const CurvatureSpectrum& spec,
                               int i_star) {
  if (!spec.is_observable(i_star)) {
    throw ContractError("sensitivity_lower_bound: index is not observable");
  }
  return std::abs(report.coefficients[i_star]) * g_norm(spec.vector(i_star), spec.G()) /
         spec.lambda(i_star);
}

}  // namespace goikit

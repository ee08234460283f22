#pragma once

// Per-feature influence on the observable subspace and the Geometric
// Observability Index,
//
//   IF(z)  = -H_OO^{-1} P_O G^{-1} psi(z)
//   GOI(z) = ||IF(z)||_G,   GOI(z)^2 = sum_{i in I_O} psi_i^2 / lambda_i^2 ||v_i||_G^2.
//
// Both GOI routes are computed and kept in the report.

#include <cstddef>
#include <vector>

#include "goikit/curvature.hpp"

namespace goikit {

struct InfluenceReport {
  std::size_t feature_id = 0;
  Twist psi = Twist::Zero();    // raw score J^T W r
  Twist psi_O = Twist::Zero();  // P_O G^{-1} psi
  Twist IF = Twist::Zero();
  double goi = 0.0;           // ||IF||_G
  double goi_spectral = 0.0;  // sqrt of the spectral sum
  Vec6 coefficients = Vec6::Zero();   // psi_i, zero off I_O
  Vec6 per_direction = Vec6::Zero();  // psi_i^2 / lambda_i^2 ||v_i||_G^2
  double rho1 = 0.0;
};

/// Report for a given raw score. Throws UnobservableError if I_O is empty.
InfluenceReport influence_from_score(const Twist& psi, const CurvatureSpectrum& spec,
                                     std::size_t feature_id = 0);

InfluenceReport influence(const Vec2& z, const Pose& g_star, const Landmark& X,
                          const CurvatureSpectrum& spec, const Mat2& W,
                          std::size_t feature_id = 0);

/// Reports for every observation, ordered by feature id.
std::vector<InfluenceReport> influence_all(const ObservationSet& set, const Pose& g,
                                           const CurvatureSpectrum& spec);

/// sqrt(sum_{i in I_O} c_i^2 / lambda_i^2 ||v_i||_G^2).
double goi_spectral(const Vec6& coefficients, const CurvatureSpectrum& spec);

/// |psi_1| / sqrt(sum_{I_O} psi_i^2) with index 1 the weakest observable
/// direction, each psi_i taken against the G-normalized v_i. Zero when every
/// coefficient vanishes.
double alignment_rho1(const Vec6& coefficients, const CurvatureSpectrum& spec);

struct DynamicSplit {
  double goi_geom = 0.0;
  double goi_bias = 0.0;
};

/// GOI of the static and bias parts of r(z) = r_static + b_dynamic. Throws
/// ContractError if the split does not reproduce the residual to 1e-12.
DynamicSplit dynamic_split(const Vec2& z, const Pose& g_star, const Landmark& X,
                           const CurvatureSpectrum& spec, const Mat2& W,
                           const Vec2& r_static, const Vec2& b_dynamic);

/// |psi_{i*}| ||v_{i*}||_G / lambda_{i*}, a lower bound on report.goi.
/// Throws ContractError unless i_star is observable.
double sensitivity_lower_bound(const InfluenceReport& report, const CurvatureSpectrum& spec,
                               int i_star);
inline double sensitivity_lower_bound(const InfluenceReport& report,
                                      const CurvatureSpectrum& spec) {
  return sensitivity_lower_bound(report, spec, spec.weakest_index());
}

}  // namespace goikit

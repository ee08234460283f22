#pragma once

// Curvature-spectrum diagnostics: per-feature dynamic/inconsistent feature
// flags and the near-degeneracy (pure rotation / low parallax) verdict.

#include <optional>
#include <string>
#include <vector>

#include "goikit/curvature.hpp"
#include "goikit/goi.hpp"

namespace goikit {

struct DetectorConfig {
  /// Absolute GOI threshold. When unset, the percentile rule below is used.
  std::optional<double> tau_goi;
  /// tau_goi = percentile(GOI over the current feature set) * scale.
  double tau_goi_percentile = 95.0;
  double tau_goi_scale = 1.0;
  double tau_rho = 0.6;
  /// Absolute eigenvalue threshold. When unset, tau_lambda_relative * lambda_max.
  std::optional<double> tau_lambda;
  double tau_lambda_relative = 1e-6;
  double rank_threshold = kDefaultRankThreshold;
  /// Explicit observable subspace; empty means O = range(H_n).
  Eigen::MatrixXd observable_basis;

  /// Throws ConfigError on non-positive thresholds or tau_rho outside (0, 1).
  void validate() const;
};

struct DynamicDetection {
  std::vector<InfluenceReport> reports;  // ordered by feature id
  std::vector<bool> flags;
  double tau_goi = 0.0;  // threshold actually applied
  double tau_rho = 0.0;
  CurvatureSpectrum spectrum;
  /// Set when n < 6, where H_n cannot have full rank.
  std::optional<std::string> warning;

  std::size_t flag_count() const;
};

enum class Verdict { kHealthy, kNearDegenerate };

struct DegeneracyVerdict {
  double lambda_min_n = 0.0;
  double tau_lambda = 0.0;
  Verdict verdict = Verdict::kHealthy;
  CurvatureSpectrum spectrum_snapshot;
};

/// Builds H_n at g, scores every feature, and flags GOI > tau_goi and
/// rho1 > tau_rho. Throws UnobservableError if I_O is empty.
DynamicDetection detect_dynamic(const ObservationSet& set, const Pose& g, const Metric& G,
                                const DetectorConfig& cfg);

/// lambda_min of P_O H_n P_O on O, thresholded against tau_lambda. An empty
/// I_O yields near-degenerate with lambda_min_n = 0.
DegeneracyVerdict detect_degeneracy(const ObservationSet& set, const Pose& g,
                                    const Metric& G, const DetectorConfig& cfg);

/// Verdict from an already assembled curvature matrix.
DegeneracyVerdict degeneracy_from_curvature(const Mat6& H_n, const Metric& G,
                                            const DetectorConfig& cfg);

/// Eigenvalues (ascending) of M restricted to the observable subspace of
/// `spec`, i.e. of B^T M B for a G-orthonormal basis B of O.
Eigen::VectorXd restricted_eigenvalues(const Mat6& M, const CurvatureSpectrum& spec);

struct CollapseCheck {
  double lambda_min = 0.0;    // of H_OO
  double lambda_min_n = 0.0;  // of (H + E)_OO
  double perturbation_norm = 0.0;
  double tau_lambda = 0.0;
  bool flagged = false;  // lambda_min_n < tau_lambda
  bool branch1_applies = false;  // lambda_min < 2/3 tau_lambda
  bool branch1_holds = true;
  bool branch2_applies = false;  // lambda_min > 2 tau_lambda
  bool branch2_holds = true;
  bool weyl_holds = true;  // lambda_min_n in [lambda_min/2, 3 lambda_min/2]

  bool passed() const { return branch1_holds && branch2_holds && weyl_holds; }
};

/// Evaluates both implications of the collapse test for H_n = H + E on the
/// observable subspace of spec_true. cfg.tau_lambda must be set. Throws
/// ContractError if ||E_OO||_op > lambda_min / 2.
CollapseCheck verify_collapse_test(const CurvatureSpectrum& spec_true, const Mat6& perturbation,
                                   const DetectorConfig& cfg);

/// Linear-interpolated percentile (0..100) of `values`.
double percentile(std::vector<double> values, double pct);

}  // namespace goikit

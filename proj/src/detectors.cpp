#include "goikit/detectors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "goikit/errors.hpp"

namespace goikit {

void DetectorConfig::validate() const {
  if (tau_goi && !(*tau_goi > 0.0)) throw ConfigError("tau_goi must be positive");
  if (!(tau_rho > 0.0 && tau_rho < 1.0)) throw ConfigError("tau_rho must lie in (0, 1)");
  if (tau_lambda && !(*tau_lambda > 0.0)) throw ConfigError("tau_lambda must be positive");
  if (!(tau_lambda_relative > 0.0)) throw ConfigError("tau_lambda_relative must be positive");
  if (!(tau_goi_percentile > 0.0 && tau_goi_percentile <= 100.0)) {
    throw ConfigError("tau_goi_percentile must lie in (0, 100]");
  }
  if (!(tau_goi_scale > 0.0)) throw ConfigError("tau_goi_scale must be positive");
  if (!(rank_threshold > 0.0)) throw ConfigError("rank_threshold must be positive");
}

std::size_t DynamicDetection::flag_count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw ContractError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = (pct / 100.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

CurvatureSpectrum spectrum_for(const Mat6& H_n, const Metric& G, const DetectorConfig& cfg) {
  if (cfg.observable_basis.size() > 0) {
    return g_eigendecompose_on(H_n, G, cfg.observable_basis, cfg.rank_threshold);
  }
  return g_eigendecompose(H_n, G, cfg.rank_threshold);
}

Eigen::MatrixXd observable_basis_of(const CurvatureSpectrum& spec) {
  Eigen::MatrixXd B(6, static_cast<Eigen::Index>(spec.observable().size()));
  Eigen::Index c = 0;
  for (int i : spec.observable()) {
    const Vec6 v = spec.vector(i);
    B.col(c++) = v / g_norm(v, spec.G());
  }
  return B;
}

}  // namespace

DynamicDetection detect_dynamic(const ObservationSet& set, const Pose& g, const Metric& G,
                                const DetectorConfig& cfg) {
  cfg.validate();
  set.validate();
  const Mat6 H_n = empirical_curvature(set, g);
  DynamicDetection out{.spectrum = spectrum_for(H_n, G, cfg)};
  if (out.spectrum.empty()) {
    throw UnobservableError("detect_dynamic: observable subspace is empty");
  }
  if (set.size() < 6) {
    out.warning = "fewer than 6 features: empirical curvature cannot have full rank";
  }
  out.reports = influence_all(set, g, out.spectrum);

  if (cfg.tau_goi) {
    out.tau_goi = *cfg.tau_goi;
  } else {
    std::vector<double> gois;
    gois.reserve(out.reports.size());
    for (const auto& r : out.reports) gois.push_back(r.goi);
    out.tau_goi = cfg.tau_goi_scale * percentile(gois, cfg.tau_goi_percentile);
  }
  out.tau_rho = cfg.tau_rho;
  out.flags.reserve(out.reports.size());
  for (const auto& r : out.reports) {
    out.flags.push_back(r.goi > out.tau_goi && r.rho1 > out.tau_rho);
  }
  return out;
}

Eigen::VectorXd restricted_eigenvalues(const Mat6& M, const CurvatureSpectrum& spec) {
  if (spec.empty()) return {};
  const Eigen::MatrixXd B = observable_basis_of(spec);
  const Eigen::MatrixXd Mr = B.transpose() * M * B;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (Mr + Mr.transpose()))
      .eigenvalues();
}

DegeneracyVerdict degeneracy_from_curvature(const Mat6& H_n, const Metric& G,
                                            const DetectorConfig& cfg) {
  cfg.validate();
  DegeneracyVerdict out{.spectrum_snapshot = spectrum_for(H_n, G, cfg)};
  const auto& spec = out.spectrum_snapshot;
  out.tau_lambda = cfg.tau_lambda ? *cfg.tau_lambda
                                  : cfg.tau_lambda_relative * spec.eigenvalues().maxCoeff();
  if (spec.empty()) {
    out.lambda_min_n = 0.0;
    out.verdict = Verdict::kNearDegenerate;
    return out;
  }
  out.lambda_min_n = restricted_eigenvalues(H_n, spec).minCoeff();
  out.verdict = out.lambda_min_n < out.tau_lambda ? Verdict::kNearDegenerate : Verdict::kHealthy;
  return out;
}

DegeneracyVerdict detect_degeneracy(const ObservationSet& set, const Pose& g, const Metric& G,
                                    const DetectorConfig& cfg) {
  set.validate();
  return degeneracy_from_curvature(empirical_curvature(set, g), G, cfg);
}

CollapseCheck verify_collapse_test(const CurvatureSpectrum& spec_true, const Mat6& perturbation,
                                   const DetectorConfig& cfg) {
  cfg.validate();
  if (!cfg.tau_lambda) throw ContractError("verify_collapse_test needs an explicit tau_lambda");
  if ((perturbation - perturbation.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, perturbation.cwiseAbs().maxCoeff())) {
    throw ContractError("verify_collapse_test: perturbation is not symmetric");
  }
  CollapseCheck out;
  out.tau_lambda = *cfg.tau_lambda;
  out.lambda_min = restricted_eigenvalues(spec_true.H(), spec_true).minCoeff();

  const Eigen::MatrixXd B = observable_basis_of(spec_true);
  out.perturbation_norm = symmetric_op_norm(B.transpose() * perturbation * B);
  if (out.perturbation_norm > 0.5 * out.lambda_min) {
    throw ContractError("verify_collapse_test: ||E_OO|| exceeds lambda_min / 2");
  }
  out.lambda_min_n = restricted_eigenvalues(spec_true.H() + perturbation, spec_true).minCoeff();
  out.flagged = out.lambda_min_n < out.tau_lambda;

  out.branch1_applies = out.lambda_min < (2.0 / 3.0) * out.tau_lambda;
  out.branch1_holds = !out.branch1_applies || out.flagged;
  out.branch2_applies = out.lambda_min > 2.0 * out.tau_lambda;
  out.branch2_holds = !out.branch2_applies || !out.flagged;
  // Eigensolver rounding is relative to the largest eigenvalue.
  const double slack = 64.0 * std::numeric_limits<double>::epsilon() *
                       spec_true.eigenvalues().cwiseAbs().maxCoeff();
  out.weyl_holds = out.lambda_min_n >= 0.5 * out.lambda_min - slack &&
                   out.lambda_min_n <= 1.5 * out.lambda_min + slack;
  return out;
}

}  // namespace goikit

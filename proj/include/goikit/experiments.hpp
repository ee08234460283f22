#pragma once

// Harnesses for the per-feature checks: Jacobian vs finite differences, the
// GOI spectral identity, the contamination oracle for the influence function,
// the collapse test, the dynamic detector and the amplification mechanism.
// Each returns records plus summary scalars, like the harnesses in sim.hpp.

#include <cstdint>
#include <vector>

#include "goikit/detectors.hpp"
#include "goikit/sim.hpp"

namespace goikit::sim {

/// Random (g, X) pairs with X in front of the camera; central differences with
/// step h on each twist coordinate. Summary: max_rel_error.
ExperimentResult jacobian_experiment(std::size_t count, std::uint64_t seed, double h = 1e-6);

/// Random SPD metric, random features against one generic scene. Compares
/// ||H_OO^{-1} psi_O||_G^2 with sum psi_i^2 / lambda_i^2 ||v_i||_G^2.
/// Summary: max_rel_discrepancy.
ExperimentResult goi_identity_experiment(std::size_t count, std::uint64_t seed);

struct InfluenceOracleConfig {
  std::size_t n_points = 200;
  std::size_t features = 20;
  std::vector<double> eps_grid{1e-2, 1e-3, 1e-4};
  double sigma = 1e-3;
};

/// Noiseless base scene (so the Gauss-Newton curvature is the exact Hessian at
/// g*), one noisy extra feature at a time. Quotient P_O log(g_eps g*^{-1}) / eps
/// against IF. Summary: median relative G-norm error per eps and its slope.
ExperimentResult influence_oracle_experiment(const InfluenceOracleConfig& cfg,
                                             std::uint64_t seed);

/// Random symmetric perturbations with ||E_OO|| < lambda_min / 2 and tau_lambda
/// spread over two decades around lambda_min. Summary: violation counts.
ExperimentResult collapse_experiment(std::size_t count, std::uint64_t seed);

struct DynamicSceneResult {
  GeneratedScene scene;
  DynamicDetection detection;
  std::vector<double> lower_bounds;
  ExperimentResult result;
};

/// Runs detect_dynamic at pose_true on a generated scene.
DynamicSceneResult dynamic_detector_experiment(const SceneSpec& spec, const DetectorConfig& cfg,
                                               std::uint64_t seed);

struct AmplificationConfig {
  SceneSpec scene;
  /// Depth scale giving the collapsed scene; the reference scene uses d = 1.
  double collapse_depth = 10.0;
};

/// Scene defaults for the dynamic experiments: 200 features, 5% weak-aligned
/// dynamic, bias of twenty noise standard deviations, depth scale 10.
SceneSpec dynamic_scene_spec();

/// Same normalized draws at d = 1 and d = collapse_depth; GOI at pose_true
/// with H_n. Summary: lambda_ratio, median GOI per class, their ratio and the
/// triangle-inequality violation count.
ExperimentResult amplification_experiment(const AmplificationConfig& cfg, std::uint64_t seed);

}  // namespace goikit::sim

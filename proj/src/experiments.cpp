#include "goikit/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "goikit/errors.hpp"
#include "goikit/estimator.hpp"
#include "goikit/goi.hpp"
#include "goikit/stats.hpp"

namespace goikit::sim {

namespace {

enum : std::uint64_t {
  kJacobian = 50,
  kGoiIdentity = 51,
  kInfluence = 52,
  kCollapse = 53,
  kDynamic = 54,
  kAmplification = 55,
};

Vec3 random_unit(RngStream& rng) {
  Vec3 v(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

Pose random_pose(RngStream& rng, double max_angle, double max_offset) {
  const Vec3 t(rng.uniform(-max_offset, max_offset), rng.uniform(-max_offset, max_offset),
               rng.uniform(-max_offset, max_offset));
  return exp_se3(make_twist(t, rng.uniform(0.0, max_angle) * random_unit(rng)));
}

Mat6 random_spd(RngStream& rng) {
  Mat6 A;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) A(i, j) = rng.normal();
  }
  Mat6 G = A * A.transpose() / 6.0 + 0.5 * Mat6::Identity();
  return 0.5 * (G + G.transpose());
}

Mat6 random_symmetric(RngStream& rng) {
  Mat6 A;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) A(i, j) = rng.normal();
  }
  return 0.5 * (A + A.transpose());
}

Eigen::MatrixXd observable_basis(const CurvatureSpectrum& spec) {
  Eigen::MatrixXd B(6, spec.observable().size());
  for (std::size_t k = 0; k < spec.observable().size(); ++k) {
    B.col(static_cast<Eigen::Index>(k)) = spec.vector(spec.observable()[k]);
  }
  return B;
}

}  // namespace

ExperimentResult jacobian_experiment(std::size_t count, std::uint64_t seed, double h) {
  if (count == 0) throw ConfigError("jacobian check needs at least one pair");
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be positive");
  ExperimentResult res{.name = "verify-jacobian", .seed = seed};
  double worst = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    RngStream rng(seed, stream_key(kJacobian, k));
    const Pose g = random_pose(rng, 3.0, 2.0);
    const double depth = rng.uniform(1.0, 10.0);
    const Vec3 y(rng.uniform(-1.0, 1.0) * depth, rng.uniform(-1.0, 1.0) * depth, depth);
    const Landmark X = act(g, y);
    const Vec2 z(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));

    const Mat26 J = jacobian(g, X);
    Mat26 fd;
    for (int c = 0; c < 6; ++c) {
      Twist e = Twist::Zero();
      e[c] = h;
      const Vec2 rp = residual(z, left_update(g, e), X);
      const Vec2 rm = residual(z, left_update(g, -e), X);
      fd.col(c) = (rp - rm) / (2.0 * h);
    }
    const double rel = (fd - J).norm() / J.norm();
    worst = std::max(worst, rel);
    res.records.push_back({res.name, count, 0.0, k, "rel_error", rel, seed});
  }
  res.summary.emplace_back("max_rel_error", worst);
  return res;
}

ExperimentResult goi_identity_experiment(std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ConfigError("goi identity needs at least one feature");
  RngStream rng(seed, stream_key(kGoiIdentity, 0));
  SceneSpec spec;
  spec.pose_true = default_pose();
  const GeneratedScene scene = generate_scene(spec, rng);
  const Metric G(random_spd(rng));
  const CurvatureSpectrum s = g_eigendecompose(empirical_curvature(scene.set, spec.pose_true), G);
  const NoiseModel& noise = scene.set.noise;

  ExperimentResult res{.name = "goi-identity", .seed = seed};
  double worst = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const Landmark X = sample_landmark(spec, rng);
    const Observation obs = sample_observation(spec.pose_true, X, noise, rng, k);
    const InfluenceReport rep = influence(obs.z, spec.pose_true, X, s, noise.W(), k);
    const double direct = rep.goi * rep.goi;
    const double spectral = rep.per_direction.sum();
    const double rel = std::abs(direct - spectral) / std::max(spectral, 1e-300);
    worst = std::max(worst, rel);
    res.records.push_back({res.name, spec.n_points, spec.depth_scale, k, "rel_discrepancy", rel, seed});
  }
  res.summary.emplace_back("max_rel_discrepancy", worst);
  return res;
}

ExperimentResult influence_oracle_experiment(const InfluenceOracleConfig& cfg,
                                             std::uint64_t seed) {
  if (cfg.features == 0 || cfg.eps_grid.empty()) {
    throw ConfigError("influence oracle needs features and an eps grid");
  }
  SceneSpec spec;
  spec.pose_true = default_pose();
  spec.n_points = cfg.n_points;
  spec.sigma = cfg.sigma;
  RngStream rng(seed, stream_key(kInfluence, 0));
  GeneratedScene scene = generate_scene(spec, rng);
  // Noiseless base observations: g* is the exact root and H_n the exact Hessian there.
  for (std::size_t i = 0; i < scene.set.size(); ++i) {
    scene.set.observations[i].z = project(act_inverse(spec.pose_true, scene.set.landmarks[i]));
  }
  const Metric G;
  const CurvatureSpectrum s = g_eigendecompose(empirical_curvature(scene.set, spec.pose_true), G);
  const Mat2& W = scene.set.noise.W();

  SolverConfig solver;
  solver.step_tol = 1e-15;
  solver.max_iters = 100;

  ExperimentResult res{.name = "influence-oracle", .seed = seed};
  std::vector<std::vector<double>> errors(cfg.eps_grid.size());
  for (std::size_t f = 0; f < cfg.features; ++f) {
    const Landmark X = sample_landmark(spec, rng);
    const Observation extra = sample_observation(spec.pose_true, X, scene.set.noise, rng, f);
    const InfluenceReport rep = influence(extra.z, spec.pose_true, X, s, W, f);
    for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
      const double eps = cfg.eps_grid[e];
      const SolveResult r =
          contaminated_solve(scene.set, extra, X, eps, spec.pose_true, G, solver, spec.pose_true);
      const Twist quotient = *r.xi_error_O / eps;
      const double rel = g_norm(quotient - rep.IF, G) / g_norm(rep.IF, G);
      errors[e].push_back(rel);
      res.records.push_back({res.name, spec.n_points, eps, f, "rel_error", rel, seed});
    }
  }
  std::vector<double> medians;
  for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
    medians.push_back(stats::median(errors[e]));
    res.summary.emplace_back("max_rel_error_eps=" + std::to_string(cfg.eps_grid[e]),
                             *std::max_element(errors[e].begin(), errors[e].end()));
  }
  for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
    res.summary.emplace_back("median_rel_error_eps=" + std::to_string(cfg.eps_grid[e]), medians[e]);
  }
  if (cfg.eps_grid.size() >= 2) {
    res.summary.emplace_back("slope", stats::fit_loglog(cfg.eps_grid, medians).slope);
  }
  return res;
}

ExperimentResult collapse_experiment(std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ConfigError("collapse test needs at least one perturbation");
  RngStream rng(seed, stream_key(kCollapse, 0));
  SceneSpec spec;
  spec.pose_true = default_pose();
  spec.depth_scale = 3.0;
  const GeneratedScene scene = generate_scene(spec, rng);
  const Metric G(random_spd(rng));
  const CurvatureSpectrum s = g_eigendecompose(empirical_curvature(scene.set, spec.pose_true), G);
  const Eigen::MatrixXd B = observable_basis(s);
  const double lambda_min = restricted_eigenvalues(s.H(), s).minCoeff();

  ExperimentResult res{.name = "collapse-test", .seed = seed};
  double b1 = 0, b2 = 0, v1 = 0, v2 = 0, vw = 0;
  for (std::size_t k = 0; k < count; ++k) {
    Mat6 E = random_symmetric(rng);
    const double target = rng.uniform(0.0, 0.99) * 0.5 * lambda_min;
    E *= target / symmetric_op_norm(B.transpose() * E * B);
    E = 0.5 * (E + E.transpose());
    DetectorConfig dc;
    dc.tau_lambda = lambda_min * std::pow(10.0, rng.uniform(-1.0, 1.0));
    const CollapseCheck c = verify_collapse_test(s, E, dc);
    b1 += c.branch1_applies;
    b2 += c.branch2_applies;
    v1 += !c.branch1_holds;
    v2 += !c.branch2_holds;
    vw += !c.weyl_holds;
    res.records.push_back({res.name, spec.n_points, spec.depth_scale, k, "lambda_min_n", c.lambda_min_n, seed});
    res.records.push_back({res.name, spec.n_points, spec.depth_scale, k, "tau_lambda", c.tau_lambda, seed});
    res.records.push_back({res.name, spec.n_points, spec.depth_scale, k, "flagged", c.flagged ? 1.0 : 0.0, seed});
  }
  res.summary.emplace_back("lambda_min", lambda_min);
  res.summary.emplace_back("branch1_cases", b1);
  res.summary.emplace_back("branch2_cases", b2);
  res.summary.emplace_back("branch1_violations", v1);
  res.summary.emplace_back("branch2_violations", v2);
  res.summary.emplace_back("weyl_violations", vw);
  return res;
}

SceneSpec dynamic_scene_spec() {
  SceneSpec spec;
  spec.pose_true = default_pose();
  spec.n_points = 200;
  spec.dynamic_fraction = 0.05;
  spec.bias_mode = BiasMode::kWeakAligned;
  spec.bias_magnitude = 20.0 * spec.sigma;
  spec.depth_scale = 10.0;
  return spec;
}

DynamicSceneResult dynamic_detector_experiment(const SceneSpec& spec, const DetectorConfig& cfg,
                                               std::uint64_t seed) {
  RngStream rng(seed, stream_key(kDynamic, 0));
  GeneratedScene scene = generate_scene(spec, rng);
  DynamicDetection detection = detect_dynamic(scene.set, spec.pose_true, Metric(), cfg);
  DynamicSceneResult out{.scene = std::move(scene), .detection = std::move(detection)};
  const auto& det = out.detection;
  ExperimentResult& res = out.result;
  res.name = "dynamic-detector";
  res.seed = seed;
  double violations = 0, flagged_dynamic = 0, n_dynamic = 0;
  for (std::size_t i = 0; i < det.reports.size(); ++i) {
    const double lb = sensitivity_lower_bound(det.reports[i], det.spectrum);
    out.lower_bounds.push_back(lb);
    violations += lb > det.reports[i].goi;
    const bool dyn = (*out.scene.set.dynamic_labels)[i];
    n_dynamic += dyn;
    flagged_dynamic += dyn && det.flags[i];
    res.records.push_back({res.name, spec.n_points, spec.depth_scale, i, "goi", det.reports[i].goi, seed});
    res.records.push_back({res.name, spec.n_points, spec.depth_scale, i, "rho1", det.reports[i].rho1, seed});
    res.records.push_back({res.name, spec.n_points, spec.depth_scale, i, "lower_bound", lb, seed});
    res.records.push_back({res.name, spec.n_points, spec.depth_scale, i, "flagged", det.flags[i] ? 1.0 : 0.0, seed});
    res.records.push_back({res.name, spec.n_points, spec.depth_scale, i, "dynamic", dyn ? 1.0 : 0.0, seed});
  }
  res.summary.emplace_back("tau_goi", det.tau_goi);
  res.summary.emplace_back("tau_rho", det.tau_rho);
  res.summary.emplace_back("flags", static_cast<double>(det.flag_count()));
  res.summary.emplace_back("dynamic_features", n_dynamic);
  res.summary.emplace_back("flagged_dynamic", flagged_dynamic);
  res.summary.emplace_back("bound_violations", violations);
  return out;
}

ExperimentResult amplification_experiment(const AmplificationConfig& cfg, std::uint64_t seed) {
  if (!(cfg.collapse_depth > 0.0)) throw ConfigError("collapse depth must be positive");
  ExperimentResult res{.name = "amplification", .seed = seed};
  const Metric G;

  SceneSpec near = cfg.scene;
  near.depth_scale = 1.0;
  RngStream rng_near(seed, stream_key(kAmplification, 0));
  const GeneratedScene ref = generate_scene(near, rng_near);
  const double lambda_ref =
      g_eigendecompose(empirical_curvature(ref.set, near.pose_true), G).lambda_min();

  SceneSpec far = cfg.scene;
  far.depth_scale = cfg.collapse_depth;
  RngStream rng_far(seed, stream_key(kAmplification, 0));
  const GeneratedScene scene = generate_scene(far, rng_far);
  const CurvatureSpectrum s = g_eigendecompose(empirical_curvature(scene.set, far.pose_true), G);
  const Mat2& W = scene.set.noise.W();

  std::vector<double> goi_dyn, goi_static;
  double triangle_violations = 0;
  for (std::size_t i = 0; i < scene.set.size(); ++i) {
    const Landmark& X = scene.set.landmark_of(i);
    const Vec2& z = scene.set.observations[i].z;
    const InfluenceReport rep = influence(z, far.pose_true, X, s, W, i);
    const DynamicSplit split =
        dynamic_split(z, far.pose_true, X, s, W, scene.r_static[i], scene.b_dynamic[i]);
    const double bound = split.goi_geom + split.goi_bias;
    if (rep.goi > bound * (1.0 + 1e-12)) triangle_violations += 1;
    const bool dyn = (*scene.set.dynamic_labels)[i];
    (dyn ? goi_dyn : goi_static).push_back(rep.goi);
    res.records.push_back({res.name, far.n_points, far.depth_scale, i, dyn ? "goi_dynamic" : "goi_static", rep.goi, seed});
    res.records.push_back({res.name, far.n_points, far.depth_scale, i, "goi_geom", split.goi_geom, seed});
    res.records.push_back({res.name, far.n_points, far.depth_scale, i, "goi_bias", split.goi_bias, seed});
  }
  if (goi_dyn.empty() || goi_static.empty()) {
    throw ConfigError("amplification needs both static and dynamic features");
  }
  const double med_dyn = stats::median(goi_dyn);
  const double med_static = stats::median(goi_static);
  res.summary.emplace_back("lambda_min_reference", lambda_ref);
  res.summary.emplace_back("lambda_min_collapsed", s.lambda_min());
  res.summary.emplace_back("lambda_ratio", lambda_ref / s.lambda_min());
  res.summary.emplace_back("median_goi_dynamic", med_dyn);
  res.summary.emplace_back("median_goi_static", med_static);
  res.summary.emplace_back("goi_ratio", med_dyn / med_static);
  res.summary.emplace_back("triangle_violations", triangle_violations);
  return res;
}

}  // namespace goikit::sim

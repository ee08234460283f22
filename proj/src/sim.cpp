#include "goikit/sim.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "goikit/detectors.hpp"
#include "goikit/errors.hpp"
#include "goikit/kernels.hpp"
#include "goikit/stats.hpp"

namespace goikit::sim {

namespace {

// Stream-key namespaces, one per harness.
enum : std::uint64_t {
  kSceneStream = 1,
  kFisherLandmarks = 10,
  kFisherDraws = 11,
  kConcentrationReference = 20,
  kConcentrationTrial = 21,
  kDegeneracy = 30,
  kStability = 40,
};

constexpr std::size_t kChunk = 1 << 16;

struct SoA {
  std::vector<double> x, y, z, u, v;
  explicit SoA(std::size_t n) : x(n), y(n), z(n), u(n), v(n) {}
  void set_point(std::size_t i, const Vec3& p) {
    x[i] = p.x();
    y[i] = p.y();
    z[i] = p.z();
  }
  kernels::PointBatch points() const { return {x, y, z}; }
  kernels::ResidualBatch residuals() const { return {u, v}; }
};

std::string fmt_key(const std::string& prefix, double value) {
  std::string s = std::to_string(value);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return prefix + s;
}

}  // namespace

void SceneSpec::validate() const {
  if (n_points == 0) throw ConfigError("scene needs at least one point");
  if (!(depth_min > kDepthMin) || !(depth_max >= depth_min)) {
    throw ConfigError("infeasible frustum: need depth_max >= depth_min > depth floor");
  }
  if (!(fov_margin > 0.0) || !std::isfinite(fov_margin)) {
    throw ConfigError("infeasible frustum: fov_margin must be positive");
  }
  if (!(depth_scale > 0.0)) throw ConfigError("depth_scale must be positive");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
  if (!(dynamic_fraction >= 0.0 && dynamic_fraction <= 1.0)) {
    throw ConfigError("dynamic_fraction must lie in [0, 1]");
  }
  if (!(bias_magnitude >= 0.0)) throw ConfigError("bias_magnitude must be non-negative");
}

// Sigma = 0 is allowed for noiseless scenes; the weight then defaults to I.
NoiseModel SceneSpec::noise() const {
  return sigma > 0.0 ? NoiseModel::isotropic(sigma) : NoiseModel(Mat2::Identity());
}

Pose default_pose() {
  const Vec3 axis = Vec3(0.3, -0.5, 0.2).normalized();
  return exp_se3(make_twist(Vec3(0.05, -0.03, 0.02), 0.15 * axis));
}

double ExperimentResult::summary_value(const std::string& key) const {
  for (const auto& [k, v] : summary) {
    if (k == key) return v;
  }
  throw ContractError("experiment summary has no key '" + key + "'");
}

Landmark sample_landmark(const SceneSpec& spec, RngStream& rng) {
  const double u = rng.uniform(-spec.fov_margin, spec.fov_margin);
  const double v = rng.uniform(-spec.fov_margin, spec.fov_margin);
  const double depth = spec.depth_scale * rng.uniform(spec.depth_min, spec.depth_max);
  return act(spec.pose_true, Vec3(u * depth, v * depth, depth));
}

std::vector<Landmark> sample_landmarks(const SceneSpec& spec, std::size_t n, RngStream& rng) {
  std::vector<Landmark> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_landmark(spec, rng));
  return out;
}

Vec2 weak_aligned_bias(const Pose& g_star, const Landmark& X, const Mat2& W,
                       const CurvatureSpectrum& spec, double magnitude) {
  // <P_O G^{-1} J^T W b, v_1>_G = v_1^T J^T W b, maximized over |b| = m by b ~ W J v_1.
  const Vec2 dir = W * (jacobian(g_star, X) * spec.vector(spec.weakest_index()));
  const double norm = dir.norm();
  if (norm == 0.0) return {magnitude, 0.0};
  return dir * (magnitude / norm);
}

GeneratedScene generate_scene(const SceneSpec& spec, RngStream& rng, const Metric& G) {
  spec.validate();
  const std::size_t n = spec.n_points;
  GeneratedScene out;
  out.set.noise = spec.noise();
  out.set.landmarks = sample_landmarks(spec, n, rng);

  // Partial Fisher-Yates for the dynamic subset.
  const auto n_dynamic =
      static_cast<std::size_t>(std::llround(spec.dynamic_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i < n_dynamic; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(order[i], order[j]);
  }
  std::vector<bool> dynamic(n, false);
  for (std::size_t i = 0; i < n_dynamic; ++i) dynamic[order[i]] = true;

  out.r_static.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.r_static[i] = spec.sigma > 0.0 ? out.set.noise.sample(rng) : Vec2::Zero();
  }

  out.b_dynamic.assign(n, Vec2::Zero());
  if (n_dynamic > 0 && spec.bias_magnitude > 0.0) {
    if (spec.bias_mode == BiasMode::kWeakAligned) {
      out.population_spectrum.emplace(g_eigendecompose(
          population_curvature(out.set.landmarks, spec.pose_true, out.set.noise.W()), G));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!dynamic[i]) continue;
      if (spec.bias_mode == BiasMode::kWeakAligned) {
        const double sign = rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        out.b_dynamic[i] = sign * weak_aligned_bias(spec.pose_true, out.set.landmarks[i],
                                                    out.set.noise.W(),
                                                    *out.population_spectrum,
                                                    spec.bias_magnitude);
      } else {
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        out.b_dynamic[i] = spec.bias_magnitude * Vec2(std::cos(theta), std::sin(theta));
      }
    }
  }

  out.set.observations.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 clean = project(act_inverse(spec.pose_true, out.set.landmarks[i]));
    out.set.observations[i] = {clean + out.r_static[i] + out.b_dynamic[i], i};
  }
  out.set.dynamic_labels = dynamic;
  return out;
}

// ---------------------------------------------------------------------------

FisherCheck fisher_check(const SceneSpec& spec, std::size_t n_mc, std::uint64_t seed,
                         unsigned threads) {
  spec.validate();
  if (!(spec.sigma > 0.0)) throw ConfigError("fisher_check needs sigma > 0");
  if (n_mc == 0) throw ConfigError("fisher_check needs at least one draw");
  const NoiseModel noise = spec.noise();
  RngStream landmark_rng(seed, stream_key(kFisherLandmarks, 0));
  const std::vector<Landmark> population = sample_landmarks(spec, spec.n_points, landmark_rng);

  const std::size_t n_chunks = (n_mc + kChunk - 1) / kChunk;
  std::vector<kernels::Accumulator> partial(n_chunks);
  stats::parallel_for(n_chunks, threads, [&](std::size_t c) {
    RngStream rng(seed, stream_key(kFisherDraws, n_mc, c));
    const std::size_t begin = c * kChunk;
    const std::size_t count = std::min(kChunk, n_mc - begin);
    SoA batch(count);
    for (std::size_t k = 0; k < count; ++k) {
      batch.set_point(k, population[rng.index(population.size())]);
      const Vec2 eta = noise.sample(rng);
      batch.u[k] = eta.x();
      batch.v[k] = eta.y();
    }
    kernels::accumulate_scores(kernels::active_level(), spec.pose_true, noise.W(),
                               batch.points(), batch.residuals(), partial[c]);
  });
  kernels::Accumulator total;
  for (const auto& p : partial) total.merge(p);

  FisherCheck out;
  out.H = population_curvature(population, spec.pose_true, noise.W());
  out.E_hat = total.score_outer_matrix() / static_cast<double>(n_mc);
  out.deviation = (out.E_hat - out.H).norm() / out.H.norm();
  return out;
}

ExperimentResult fisher_experiment(const SceneSpec& spec, const std::vector<std::size_t>& n_grid,
                                   std::uint64_t seed, unsigned threads) {
  ExperimentResult res{.name = "fisher-check", .seed = seed};
  std::vector<double> ns, devs;
  for (std::size_t n_mc : n_grid) {
    const FisherCheck fc = fisher_check(spec, n_mc, seed, threads);
    res.records.push_back({res.name, n_mc, spec.depth_scale, 0, "deviation", fc.deviation, seed});
    res.summary.emplace_back(fmt_key("deviation_n=", static_cast<double>(n_mc)), fc.deviation);
    ns.push_back(static_cast<double>(n_mc));
    devs.push_back(fc.deviation);
  }
  if (ns.size() >= 2) res.summary.emplace_back("slope", stats::fit_loglog(ns, devs).slope);
  return res;
}

// ---------------------------------------------------------------------------

Mat6 reference_curvature(const SceneSpec& spec, std::size_t size, std::uint64_t seed,
                         unsigned threads) {
  spec.validate();
  const NoiseModel noise = spec.noise();
  const std::size_t n_chunks = (size + kChunk - 1) / kChunk;
  std::vector<kernels::Accumulator> partial(n_chunks);
  stats::parallel_for(n_chunks, threads, [&](std::size_t c) {
    RngStream rng(seed, stream_key(kConcentrationReference, c));
    const std::size_t count = std::min(kChunk, size - c * kChunk);
    SoA batch(count);
    for (std::size_t k = 0; k < count; ++k) batch.set_point(k, sample_landmark(spec, rng));
    kernels::accumulate_curvature(kernels::active_level(), spec.pose_true, noise.W(),
                                  batch.points(), partial[c]);
  });
  kernels::Accumulator total;
  for (const auto& p : partial) total.merge(p);
  return total.curvature_matrix() / static_cast<double>(size);
}

ExperimentResult concentration_experiment(const SceneSpec& spec, const ConcentrationConfig& cfg,
                                          std::uint64_t seed) {
  if (cfg.trials < 30) throw ConfigError("concentration needs at least 30 trials per n");
  const NoiseModel noise = spec.noise();
  const Mat6 H = reference_curvature(spec, cfg.reference_size, seed, cfg.threads);

  ExperimentResult res{.name = "concentration", .seed = seed};
  std::vector<double> ns, qs;
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const std::size_t n = cfg.n_grid[ni];
    std::vector<double> dev(cfg.trials);
    stats::parallel_for(cfg.trials, cfg.threads, [&](std::size_t trial) {
      RngStream rng(seed, stream_key(kConcentrationTrial, ni, trial));
      SoA batch(n);
      for (std::size_t k = 0; k < n; ++k) batch.set_point(k, sample_landmark(spec, rng));
      kernels::Accumulator acc;
      kernels::accumulate_curvature(kernels::active_level(), spec.pose_true, noise.W(),
                                    batch.points(), acc);
      dev[trial] = symmetric_op_norm(acc.curvature_matrix() / static_cast<double>(n) - H);
    });
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
      res.records.push_back({res.name, n, spec.depth_scale, trial, "op_deviation", dev[trial], seed});
    }
    const double q = stats::quantile(dev, cfg.quantile);
    res.records.push_back({res.name, n, spec.depth_scale, cfg.trials, "quantile", q, seed});
    res.summary.emplace_back(fmt_key("quantile_n=", static_cast<double>(n)), q);
    ns.push_back(static_cast<double>(n));
    qs.push_back(q);
  }
  res.summary.emplace_back("h_ref_norm", H.norm());
  if (ns.size() >= 2) res.summary.emplace_back("slope", stats::fit_loglog(ns, qs).slope);
  return res;
}

double finite_population_deviation(const std::vector<Landmark>& population, std::size_t n,
                                   const Pose& g_star, const Mat2& W) {
  if (n == 0 || n > population.size()) throw ConfigError("subsample size out of range");
  const Mat6 H = population_curvature(population, g_star, W);
  const Mat6 H_n =
      population_curvature(std::span<const Landmark>(population.data(), n), g_star, W);
  return symmetric_op_norm(H_n - H);
}

// ---------------------------------------------------------------------------

std::vector<SweepPoint> degeneracy_sweep(const SceneSpec& spec, const std::vector<double>& d_grid,
                                         std::uint64_t seed, const Metric& G) {
  if (!std::is_sorted(d_grid.begin(), d_grid.end())) {
    throw ConfigError("d_grid must be ascending");
  }
  const NoiseModel noise = spec.noise();
  std::vector<SweepPoint> out;
  for (double d : d_grid) {
    SceneSpec scaled = spec;
    scaled.depth_scale = d;
    scaled.validate();
    RngStream rng(seed, stream_key(kDegeneracy, 0));
    const std::vector<Landmark> landmarks = sample_landmarks(scaled, spec.n_points, rng);
    const Mat6 H = population_curvature(landmarks, spec.pose_true, noise.W());
    const CurvatureSpectrum s = g_eigendecompose(H, G);

    SweepPoint p;
    p.d = d;
    p.H = H;
    p.eigenvalues = s.eigenvalues();
    for (int i = 0; i < 6; ++i) {
      const Vec6 v = s.vector(i);
      p.translational_weight[i] = v.head<3>().squaredNorm() / v.squaredNorm();
    }
    double jt = 0.0;
    for (const auto& X : landmarks) {
      const Eigen::Matrix<double, 2, 3> Jt = jacobian(spec.pose_true, X).leftCols<3>();
      jt += Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>>(Jt).singularValues()[0];
    }
    p.mean_jt_norm = jt / static_cast<double>(landmarks.size());
    p.observable_count = s.observable().size();
    out.push_back(p);
  }
  return out;
}

ExperimentResult degeneracy_experiment(const SceneSpec& spec, const std::vector<double>& d_grid,
                                       std::uint64_t seed, double tau_lambda) {
  const std::vector<SweepPoint> sweep = degeneracy_sweep(spec, d_grid, seed);
  ExperimentResult res{.name = "degeneracy-sweep", .seed = seed};
  const std::size_t n = spec.n_points;

  if (!(tau_lambda > 0.0)) tau_lambda = 1e-6 * sweep.front().eigenvalues.maxCoeff();
  res.summary.emplace_back("tau_lambda", tau_lambda);

  std::vector<double> ds, jt;
  std::vector<std::vector<double>> small(3);
  double rot_change = 0.0;
  double observed_flip = 0.0;
  for (const auto& p : sweep) {
    for (int i = 0; i < 6; ++i) {
      res.records.push_back({res.name, n, p.d, 0, "lambda_" + std::to_string(i + 1),
                             p.eigenvalues[i], seed});
    }
    res.records.push_back({res.name, n, p.d, 0, "mean_jt_norm", p.mean_jt_norm, seed});
    DetectorConfig dc;
    dc.tau_lambda = tau_lambda;
    const bool degenerate =
        degeneracy_from_curvature(p.H, Metric(), dc).verdict == Verdict::kNearDegenerate;
    res.records.push_back({res.name, n, p.d, 0, "near_degenerate", degenerate ? 1.0 : 0.0, seed});
    if (degenerate && observed_flip == 0.0) observed_flip = p.d;
    ds.push_back(p.d);
    jt.push_back(p.mean_jt_norm);
    for (int i = 0; i < 3; ++i) small[i].push_back(p.eigenvalues[i]);
    for (int i = 3; i < 6; ++i) {
      rot_change = std::max(rot_change, std::abs(p.eigenvalues[i] / sweep.front().eigenvalues[i] - 1.0));
    }
  }
  if (ds.size() >= 2) {
    for (int i = 0; i < 3; ++i) {
      res.summary.emplace_back("slope_lambda_" + std::to_string(i + 1),
                               stats::fit_loglog(ds, small[i]).slope);
    }
    res.summary.emplace_back("slope_jt_norm", stats::fit_loglog(ds, jt).slope);
    const auto fit = stats::fit_loglog(ds, small[0]);
    // lambda_min(d) = 10^b d^s crosses tau at d = (tau / 10^b)^(1/s).
    const double predicted = std::pow(10.0, (std::log10(tau_lambda) - fit.intercept) / fit.slope);
    res.summary.emplace_back("predicted_flip_depth", predicted);
  }
  // With lambda_min ~ 1/d^2 from the first grid point.
  res.summary.emplace_back("analytic_flip_depth",
                           sweep.front().d * std::sqrt(sweep.front().eigenvalues[0] / tau_lambda));
  double last_healthy = 0.0;
  for (const auto& p : sweep) {
    DetectorConfig dc;
    dc.tau_lambda = tau_lambda;
    if (degeneracy_from_curvature(p.H, Metric(), dc).verdict == Verdict::kHealthy) {
      last_healthy = p.d;
    }
  }
  res.summary.emplace_back("last_healthy_depth", last_healthy);
  res.summary.emplace_back("observed_flip_depth", observed_flip);
  res.summary.emplace_back("max_rotational_change", rot_change);
  return res;
}

// ---------------------------------------------------------------------------

ExperimentResult stability_experiment(const SceneSpec& spec, const StabilityConfig& cfg,
                                      std::uint64_t seed) {
  if (cfg.trials < 1) throw ConfigError("stability needs at least one trial");
  struct Cell {
    std::size_t n;
    double d;
    std::size_t ni, di;
  };
  std::vector<Cell> cells;
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    for (std::size_t di = 0; di < cfg.d_grid.size(); ++di) {
      cells.push_back({cfg.n_grid[ni], cfg.d_grid[di], ni, di});
    }
  }
  struct Outcome {
    double error = 0.0;
    double lambda_min = 0.0;
    bool failed = false;
  };
  const std::size_t total = cells.size() * cfg.trials;
  std::vector<Outcome> outcomes(total);
  const Metric G = Metric::identity();

  stats::parallel_for(total, cfg.threads, [&](std::size_t k) {
    const Cell& cell = cells[k / cfg.trials];
    const std::size_t trial = k % cfg.trials;
    SceneSpec s = spec;
    s.n_points = cell.n;
    s.depth_scale = cell.d;
    s.dynamic_fraction = 0.0;
    RngStream rng(seed, stream_key(kStability, cell.ni, cell.di, trial));
    const GeneratedScene scene = generate_scene(s, rng, G);
    Outcome& o = outcomes[k];
    o.lambda_min =
        g_eigendecompose(empirical_curvature(scene.set, spec.pose_true), G).lambda_min();
    try {
      const SolveResult r = gauss_newton(scene.set, spec.pose_true, G, cfg.solver, spec.pose_true);
      o.error = g_norm(*r.xi_error_O, G);
      o.failed = !r.converged;
    } catch (const BasinEscapeError&) {
      o.failed = true;
    } catch (const DegeneracyError&) {
      o.failed = true;
    }
  });

  ExperimentResult res{.name = "stability", .seed = seed};
  double failures = 0.0, failures_d100 = 0.0;
  std::vector<double> n_axis, n_err, lam_axis, lam_err;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    std::vector<double> errs, lams;
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
      const Outcome& o = outcomes[c * cfg.trials + trial];
      res.records.push_back({res.name, cell.n, cell.d, trial, "error_norm", o.error, seed});
      res.records.push_back({res.name, cell.n, cell.d, trial, "lambda_min", o.lambda_min, seed});
      res.records.push_back({res.name, cell.n, cell.d, trial, "failed", o.failed ? 1.0 : 0.0, seed});
      if (o.failed) {
        failures += 1.0;
        if (cell.d <= 100.0) failures_d100 += 1.0;
      } else {
        errs.push_back(o.error);
      }
      lams.push_back(o.lambda_min);
    }
    if (errs.empty()) continue;
    const double med_err = stats::median(errs);
    const double med_lam = stats::median(lams);
    res.records.push_back({res.name, cell.n, cell.d, cfg.trials, "median_error", med_err, seed});
    res.records.push_back({res.name, cell.n, cell.d, cfg.trials, "median_lambda_min", med_lam, seed});
    if (cell.d == cfg.d_for_n_sweep) {
      n_axis.push_back(static_cast<double>(cell.n));
      n_err.push_back(med_err);
    }
    if (cell.n == cfg.n_for_d_sweep) {
      lam_axis.push_back(med_lam);
      lam_err.push_back(med_err);
    }
  }
  res.summary.emplace_back("failures", failures);
  res.summary.emplace_back("failures_d_le_100", failures_d100);
  if (n_axis.size() >= 2) res.summary.emplace_back("slope_vs_n", stats::fit_loglog(n_axis, n_err).slope);
  if (lam_axis.size() >= 2) {
    res.summary.emplace_back("slope_vs_lambda_min", stats::fit_loglog(lam_axis, lam_err).slope);
  }
  return res;
}

}  // namespace goikit::sim

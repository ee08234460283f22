#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "goikit/errors.hpp"
#include "goikit/random.hpp"
#include "goikit/sim.hpp"
#include "goikit/stats.hpp"
#include "support.hpp"

using namespace goikit;
using namespace goikit::sim;

namespace {

SceneSpec small_spec() {
  SceneSpec s;
  s.n_points = 100;
  s.pose_true = default_pose();
  return s;
}

// |<P_O G^{-1} J^T W b, v_1>_G| computed the long way.
double weak_alignment(const Vec2& b, const Landmark& X, const Pose& g, const Mat2& W,
                      const CurvatureSpectrum& spec) {
  const Twist psi = jacobian(g, X).transpose() * (W * b);
  const Twist rep = project_observable(score_representer(psi, spec.G()), spec);
  return std::abs(g_inner(rep, spec.vector(spec.weakest_index()), spec.G()));
}

}  // namespace

TEST(SceneSpec, RejectsInfeasibleFrustum) {
  SceneSpec s = small_spec();
  EXPECT_NO_THROW(s.validate());
  s.depth_min = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec();
  s.depth_max = 1.0;  // below depth_min
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec();
  s.fov_margin = -0.1;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec();
  s.dynamic_fraction = 1.5;
  EXPECT_THROW(s.validate(), ConfigError);
  RngStream rng(1, 0);
  EXPECT_THROW(generate_scene(s, rng), ConfigError);
}

TEST(GenerateScene, LandmarksInsideFrustum) {
  SceneSpec s = small_spec();
  s.depth_scale = 7.0;
  RngStream rng(2, 0);
  const GeneratedScene g = generate_scene(s, rng);
  for (const auto& X : g.set.landmarks) {
    const Vec3 y = act_inverse(s.pose_true, X);
    EXPECT_GE(y.z(), 7.0 * s.depth_min * (1 - 1e-12));
    EXPECT_LE(y.z(), 7.0 * s.depth_max * (1 + 1e-12));
    EXPECT_LE(std::abs(y.x() / y.z()), s.fov_margin + 1e-12);
    EXPECT_LE(std::abs(y.y() / y.z()), s.fov_margin + 1e-12);
  }
}

TEST(GenerateScene, StaticSceneHasNoBias) {
  SceneSpec s = small_spec();
  RngStream rng(3, 0);
  const GeneratedScene g = generate_scene(s, rng);
  ASSERT_TRUE(g.set.dynamic_labels);
  for (std::size_t i = 0; i < g.set.size(); ++i) {
    EXPECT_FALSE((*g.set.dynamic_labels)[i]);
    EXPECT_EQ(g.b_dynamic[i], Vec2::Zero());
  }
}

TEST(GenerateScene, NoiselessStaticResidualsVanish) {
  SceneSpec s = small_spec();
  s.sigma = 0.0;
  RngStream rng(4, 0);
  const GeneratedScene g = generate_scene(s, rng);
  for (std::size_t i = 0; i < g.set.size(); ++i) {
    EXPECT_EQ(residual(g.set.observations[i], s.pose_true, g.set.landmark_of(i)), Vec2::Zero());
  }
}

TEST(GenerateScene, DynamicSplitIsExact) {
  SceneSpec s = small_spec();
  s.n_points = 200;
  s.dynamic_fraction = 0.05;
  s.bias_magnitude = 0.02;
  for (BiasMode mode : {BiasMode::kRandom, BiasMode::kWeakAligned}) {
    s.bias_mode = mode;
    RngStream rng(5, 0);
    const GeneratedScene g = generate_scene(s, rng);
    std::size_t dynamic = 0;
    for (std::size_t i = 0; i < g.set.size(); ++i) {
      const Vec2 r = residual(g.set.observations[i], s.pose_true, g.set.landmark_of(i));
      EXPECT_LT((r - g.r_static[i] - g.b_dynamic[i]).norm(), 1e-12);
      if ((*g.set.dynamic_labels)[i]) {
        ++dynamic;
        EXPECT_NEAR(g.b_dynamic[i].norm(), 0.02, 1e-15);
      } else {
        EXPECT_EQ(g.b_dynamic[i], Vec2::Zero());
      }
    }
    EXPECT_EQ(dynamic, 10u);
  }
}

TEST(GenerateScene, SameStreamSameScene) {
  SceneSpec s = small_spec();
  s.dynamic_fraction = 0.1;
  s.bias_magnitude = 0.01;
  RngStream a(6, 3), b(6, 3);
  const GeneratedScene x = generate_scene(s, a), y = generate_scene(s, b);
  for (std::size_t i = 0; i < x.set.size(); ++i) {
    EXPECT_EQ(x.set.observations[i].z, y.set.observations[i].z);
    EXPECT_EQ(x.set.landmarks[i], y.set.landmarks[i]);
  }
  EXPECT_EQ(*x.set.dynamic_labels, *y.set.dynamic_labels);
}

TEST(WeakAlignedBias, MatchesAngularSearch) {
  testing_support::Gen gen(7);
  SceneSpec s = small_spec();
  RngStream rng(7, 0);
  const std::vector<Landmark> pop = sample_landmarks(s, 50, rng);
  const Mat2 W = s.noise().W();
  const Metric G(gen.spd(0.3));
  const CurvatureSpectrum spec = g_eigendecompose(population_curvature(pop, s.pose_true, W), G);
  for (int k = 0; k < 20; ++k) {
    const Landmark& X = pop[k];
    const Vec2 b = weak_aligned_bias(s.pose_true, X, W, spec, 0.01);
    EXPECT_NEAR(b.norm(), 0.01, 1e-15);
    double best = 0.0;
    for (int a = 0; a < 36000; ++a) {
      const double t = 2 * std::numbers::pi * a / 36000.0;
      best = std::max(best, weak_alignment(0.01 * Vec2(std::cos(t), std::sin(t)), X, s.pose_true, W, spec));
    }
    const double got = weak_alignment(b, X, s.pose_true, W, spec);
    EXPECT_GE(got, best * (1 - 1e-12));
    EXPECT_LE(got, best * (1 + 1e-7));
  }
}

TEST(WeakAlignedBias, BeatsRandomInPairedTrials) {
  SceneSpec s = small_spec();
  s.n_points = 200;
  s.dynamic_fraction = 0.25;
  s.bias_magnitude = 0.01;
  std::size_t wins = 0, pairs = 0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    s.bias_mode = BiasMode::kWeakAligned;
    RngStream r1(8, trial);
    const GeneratedScene weak = generate_scene(s, r1);
    s.bias_mode = BiasMode::kRandom;
    RngStream r2(8, trial);
    const GeneratedScene random = generate_scene(s, r2);
    const CurvatureSpectrum& spec = *weak.population_spectrum;
    const Mat2 W = weak.set.noise.W();
    for (std::size_t i = 0; i < weak.set.size(); ++i) {
      if (!(*weak.set.dynamic_labels)[i]) continue;
      ASSERT_TRUE((*random.set.dynamic_labels)[i]);
      const Landmark& X = weak.set.landmark_of(i);
      const double a = weak_alignment(weak.b_dynamic[i], X, s.pose_true, W, spec);
      const double b = weak_alignment(random.b_dynamic[i], X, s.pose_true, W, spec);
      wins += a > b;
      ++pairs;
    }
  }
  EXPECT_EQ(pairs, 1000u);
  EXPECT_GE(static_cast<double>(wins), 0.9 * pairs);
}

TEST(Fisher, MonteCarloMatchesCurvature) {
  SceneSpec s = small_spec();
  s.n_points = 20;
  const FisherCheck a = fisher_check(s, 100000, 9);
  EXPECT_LT(a.deviation, 0.05);
  EXPECT_LT((a.H - a.H.transpose()).norm(), 1e-9 * a.H.norm());
  s.sigma = 0.0;
  EXPECT_THROW(fisher_check(s, 1000, 9), ConfigError);
}

TEST(Fisher, PerDrawIdentityWithIsotropicNoise) {
  // J^T W Sigma W J = J^T W J when W = Sigma^{-1}.
  testing_support::Gen gen(10);
  const NoiseModel noise = NoiseModel::isotropic(2e-3);
  for (int k = 0; k < 20; ++k) {
    const Pose g = gen.pose();
    const Mat26 J = jacobian(g, gen.point_in_front(g));
    const Mat6 lhs = J.transpose() * noise.W() * noise.Sigma() * noise.W() * J;
    const Mat6 rhs = J.transpose() * noise.W() * J;
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * rhs.norm());
  }
}

TEST(Concentration, FullFixedPopulationHasZeroDeviation) {
  SceneSpec s = small_spec();
  RngStream rng(11, 0);
  const std::vector<Landmark> pop = sample_landmarks(s, 500, rng);
  const Mat2 W = s.noise().W();
  EXPECT_EQ(finite_population_deviation(pop, 500, s.pose_true, W), 0.0);
  EXPECT_GT(finite_population_deviation(pop, 50, s.pose_true, W), 0.0);
  EXPECT_THROW(finite_population_deviation(pop, 501, s.pose_true, W), ConfigError);
}

TEST(Concentration, RequiresThirtyTrials) {
  ConcentrationConfig cfg;
  cfg.trials = 29;
  EXPECT_THROW(concentration_experiment(small_spec(), cfg, 1), ConfigError);
}

TEST(Concentration, QuantileDecreasesWithN) {
  ConcentrationConfig cfg;
  cfg.n_grid = {100, 1000, 10000};
  cfg.trials = 30;
  cfg.reference_size = 200000;
  const ExperimentResult r = concentration_experiment(small_spec(), cfg, 12);
  EXPECT_GT(r.summary_value("quantile_n=100"), r.summary_value("quantile_n=1000"));
  EXPECT_GT(r.summary_value("quantile_n=1000"), r.summary_value("quantile_n=10000"));
  EXPECT_EQ(r.records.size(), 3u * 31u);
}

TEST(DegeneracySweep, FullRankNearAndCollapseFar) {
  SceneSpec s = small_spec();
  const std::vector<double> grid{1, 10, 100, 1000};
  const auto sweep = degeneracy_sweep(s, grid, 13);
  ASSERT_EQ(sweep.size(), 4u);
  EXPECT_EQ(sweep.front().observable_count, 6u);
  std::vector<double> lam;
  for (const auto& p : sweep) lam.push_back(p.eigenvalues[0]);
  EXPECT_NEAR(stats::fit_loglog(grid, lam).slope, -2.0, 0.2);
  std::vector<double> jt;
  for (const auto& p : sweep) jt.push_back(p.mean_jt_norm);
  EXPECT_NEAR(stats::fit_loglog(grid, jt).slope, -1.0, 0.05);
  // The weakest directions become translational, the stiffest stay rotational.
  EXPECT_GT(sweep.back().translational_weight[0], 0.99);
  EXPECT_LT(sweep.back().translational_weight[5], 0.01);
  for (int i = 3; i < 6; ++i) {
    EXPECT_LT(std::abs(sweep.back().eigenvalues[i] / sweep.front().eigenvalues[i] - 1), 0.1);
  }
  EXPECT_THROW(degeneracy_sweep(s, {10, 1}, 13), ConfigError);
}

TEST(DegeneracyExperiment, FlipMatchesPrediction) {
  const ExperimentResult r =
      degeneracy_experiment(small_spec(), {1, 3, 10, 30, 100, 300, 1000}, 14, 0.0);
  const double analytic = r.summary_value("analytic_flip_depth");
  const double observed = r.summary_value("observed_flip_depth");
  ASSERT_GT(observed, 0.0);
  EXPECT_LT(r.summary_value("last_healthy_depth"), analytic);
  EXPECT_GE(observed, analytic);
  EXPECT_LT(std::abs(std::log10(r.summary_value("predicted_flip_depth") / analytic)), 1.0);
}

TEST(Stability, NoiselessRecoveryIsExact) {
  SceneSpec s = small_spec();
  s.sigma = 0.0;
  StabilityConfig cfg;
  cfg.n_grid = {50, 200};
  cfg.d_grid = {1, 10};
  cfg.trials = 3;
  const ExperimentResult r = stability_experiment(s, cfg, 15);
  EXPECT_EQ(r.summary_value("failures"), 0.0);
  for (const auto& rec : r.records) {
    if (rec.statistic == "error_norm") EXPECT_LT(rec.value, 1e-8);
  }
}

TEST(Stability, ErrorShrinksWithN) {
  StabilityConfig cfg;
  cfg.n_grid = {100, 1000, 10000};
  cfg.d_grid = {1};
  cfg.trials = 20;
  cfg.n_for_d_sweep = 1000;
  const ExperimentResult r = stability_experiment(small_spec(), cfg, 16);
  EXPECT_EQ(r.summary_value("failures"), 0.0);
  EXPECT_NEAR(r.summary_value("slope_vs_n"), -0.5, 0.15);
}

TEST(Stability, ParallelMatchesSerial) {
  StabilityConfig cfg;
  cfg.n_grid = {100, 300};
  cfg.d_grid = {1, 10};
  cfg.trials = 5;
  const ExperimentResult a = stability_experiment(small_spec(), cfg, 17);
  cfg.threads = 4;
  const ExperimentResult b = stability_experiment(small_spec(), cfg, 17);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].statistic, b.records[i].statistic);
    EXPECT_EQ(a.records[i].value, b.records[i].value);
    EXPECT_EQ(a.records[i].trial, b.records[i].trial);
  }
  EXPECT_EQ(a.summary, b.summary);
}

TEST(Rng, SameIdsSameDraws) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.normal(), b.normal());
  RngStream c = rng_stream(42, 7), d(42, 7);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(c.uniform(0, 1), d.uniform(0, 1));
}

TEST(Rng, DistinctStreamsAreUncorrelated) {
  for (std::uint64_t id : {std::uint64_t{1}, std::uint64_t{2}, std::uint64_t{1000}, stream_key(40, 1, 2, 3)}) {
    RngStream a(42, 0), b(42, id);
    const int n = 10000;
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i < n; ++i) {
      const double x = a.normal(), y = b.normal();
      sa += x;
      sb += y;
      sab += x * y;
      saa += x * x;
      sbb += y * y;
    }
    const double cov = sab / n - sa / n * sb / n;
    const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
    EXPECT_LT(std::abs(corr), 0.05) << id;
  }
  RngStream x(1, 0), y(2, 0);
  EXPECT_NE(x.normal(), y.normal());
}

TEST(Rng, StreamKeysAreDistinct) {
  std::set<std::uint64_t> keys;
  for (std::uint64_t e = 0; e < 8; ++e) {
    for (std::uint64_t a = 0; a < 8; ++a) {
      for (std::uint64_t b = 0; b < 8; ++b) {
        for (std::uint64_t c = 0; c < 8; ++c) keys.insert(stream_key(e, a, b, c));
      }
    }
  }
  EXPECT_EQ(keys.size(), 4096u);
}

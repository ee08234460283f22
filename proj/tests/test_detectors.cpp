#include <gtest/gtest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "goikit/detectors.hpp"
#include "goikit/errors.hpp"
#include "support.hpp"

using namespace goikit;
using testing_support::Gen;

namespace {

ObservationSet noisy_scene(Gen& gen, const Pose& g, int n, double noise = 1e-2) {
  ObservationSet set = testing_support::noiseless_scene(gen, g, n);
  for (auto& o : set.observations) o.z += Vec2(gen.normal(), gen.normal()) * noise;
  return set;
}

DetectorConfig with_thresholds(double tau_goi, double tau_rho) {
  DetectorConfig cfg;
  cfg.tau_goi = tau_goi;
  cfg.tau_rho = tau_rho;
  return cfg;
}

// Smallest eigenvalue of B^T H B for a G-orthonormal basis B of the whole
// space, built from a Cholesky factor of G rather than from the spectrum.
double lambda_min_reference(const Mat6& H, const Mat6& G) {
  const Mat6 L = G.llt().matrixL();
  const Mat6 Linv = L.inverse();
  const Mat6 C = Linv * H * Linv.transpose();
  return Eigen::SelfAdjointEigenSolver<Mat6>(0.5 * (C + C.transpose())).eigenvalues()[0];
}

}  // namespace

TEST(DetectorConfig, Validation) {
  DetectorConfig ok;
  EXPECT_NO_THROW(ok.validate());
  for (double bad : {0.0, 1.0, -0.1, 1.5}) {
    DetectorConfig c;
    c.tau_rho = bad;
    EXPECT_THROW(c.validate(), ConfigError);
  }
  DetectorConfig c1;
  c1.tau_goi = 0.0;
  EXPECT_THROW(c1.validate(), ConfigError);
  DetectorConfig c2;
  c2.tau_lambda = -1.0;
  EXPECT_THROW(c2.validate(), ConfigError);
}

TEST(Percentile, LinearInterpolation) {
  EXPECT_EQ(percentile({3, 1, 2}, 50), 2.0);
  EXPECT_EQ(percentile({0, 10}, 95), 9.5);
  EXPECT_EQ(percentile({4}, 95), 4.0);
  EXPECT_EQ(percentile({1, 2, 3, 4, 5}, 100), 5.0);
  EXPECT_THROW(percentile({}, 50), ContractError);
}

TEST(DetectDynamic, NoiselessSceneHasNoFlags) {
  Gen gen(81);
  const Pose g = gen.pose();
  const ObservationSet set = testing_support::noiseless_scene(gen, g, 40);
  const DynamicDetection d = detect_dynamic(set, g, Metric(), with_thresholds(1e-9, 0.1));
  EXPECT_EQ(d.flag_count(), 0u);
  ASSERT_EQ(d.reports.size(), 40u);
  for (std::size_t i = 0; i < d.reports.size(); ++i) {
    EXPECT_EQ(d.reports[i].feature_id, i);
    EXPECT_LT(d.reports[i].goi, 1e-9);
  }
  EXPECT_FALSE(d.warning);
}

TEST(DetectDynamic, WeakAlignedFeatureIsFlagged) {
  Gen gen(82);
  const Pose g = gen.pose();
  ObservationSet set = testing_support::noiseless_scene(gen, g, 60);
  const CurvatureSpectrum spec = g_eigendecompose(empirical_curvature(set, g), Metric());
  const Twist v1 = spec.vector(spec.weakest_index());
  // Residual along J v1 maximizes the score's v1 coefficient for feature 0.
  const Mat26 J = jacobian(g, set.landmark_of(0));
  const Vec2 r = (J * v1).normalized() * 0.05;
  set.observations[0].z += r;
  const DynamicDetection d = detect_dynamic(set, g, Metric(), with_thresholds(1e-6, 0.01));
  // Brute-force rule on the reports.
  for (std::size_t i = 0; i < d.reports.size(); ++i) {
    const bool expected = d.reports[i].goi > 1e-6 && d.reports[i].rho1 > 0.01;
    EXPECT_EQ(d.flags[i], expected) << i;
  }
  EXPECT_TRUE(d.flags[0]);
}

TEST(DetectDynamic, ConstructedScoreMeetsBothThresholds) {
  const CurvatureSpectrum spec = g_eigendecompose(Mat6(Vec6(0.1, 1, 2, 3, 4, 5).asDiagonal()), Metric());
  const InfluenceReport r = influence_from_score(3.0 * spec.vector(0), spec);
  EXPECT_NEAR(r.rho1, 1.0, 1e-15);
  EXPECT_NEAR(r.goi, 30.0, 1e-12);
  EXPECT_TRUE(r.goi > 10.0 && r.rho1 > 0.6);
}

TEST(DetectDynamic, MatchesBruteForceThresholds) {
  Gen gen(83);
  for (int k = 0; k < 20; ++k) {
    const Pose g = gen.pose();
    const ObservationSet set = noisy_scene(gen, g, 80);
    const Metric G(gen.spd(0.2));
    const double tau_rho = gen.uniform(0.05, 0.9);
    DetectorConfig cfg;
    cfg.tau_rho = tau_rho;
    const DynamicDetection d = detect_dynamic(set, g, G, cfg);
    std::vector<double> gois;
    for (const auto& r : d.reports) gois.push_back(r.goi);
    std::sort(gois.begin(), gois.end());
    const double pos = 0.95 * (gois.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double tau = gois[lo] + (pos - lo) * (gois[lo + 1] - gois[lo]);
    EXPECT_DOUBLE_EQ(d.tau_goi, tau);
    for (std::size_t i = 0; i < d.reports.size(); ++i) {
      EXPECT_EQ(d.flags[i], d.reports[i].goi > tau && d.reports[i].rho1 > tau_rho);
    }
  }
}

TEST(DetectDynamic, RaisingThresholdsNeverAddsFlags) {
  Gen gen(84);
  const Pose g = gen.pose();
  const ObservationSet set = noisy_scene(gen, g, 100);
  const DynamicDetection base = detect_dynamic(set, g, Metric(), with_thresholds(1e-3, 0.1));
  ASSERT_GT(base.flag_count(), 0u);
  for (const auto& cfg : {with_thresholds(1e-2, 0.1), with_thresholds(1e-3, 0.3),
                          with_thresholds(5e-2, 0.5)}) {
    const DynamicDetection d = detect_dynamic(set, g, Metric(), cfg);
    for (std::size_t i = 0; i < d.flags.size(); ++i) {
      if (d.flags[i]) EXPECT_TRUE(base.flags[i]);
    }
  }
}

TEST(DetectDynamic, DeterministicAndWarnsOnFewFeatures) {
  Gen gen(85);
  const Pose g = gen.pose();
  const ObservationSet set = noisy_scene(gen, g, 50);
  const DynamicDetection a = detect_dynamic(set, g, Metric(), DetectorConfig());
  const DynamicDetection b = detect_dynamic(set, g, Metric(), DetectorConfig());
  EXPECT_EQ(a.flags, b.flags);
  EXPECT_EQ(a.tau_goi, b.tau_goi);
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    EXPECT_EQ(a.reports[i].goi, b.reports[i].goi);
    EXPECT_EQ(a.reports[i].rho1, b.reports[i].rho1);
  }

  const ObservationSet few = noisy_scene(gen, g, 4);
  const DynamicDetection w = detect_dynamic(few, g, Metric(), DetectorConfig());
  EXPECT_TRUE(w.warning);
  EXPECT_EQ(w.reports.size(), 4u);
}

TEST(DetectDegeneracy, ThresholdExamples) {
  const Mat6 H = Mat6(Vec6(0.2, 1, 2, 3, 4, 5).asDiagonal());
  DetectorConfig cfg;
  cfg.tau_lambda = 0.4;  // lambda_min = tau / 2
  DegeneracyVerdict v = degeneracy_from_curvature(H, Metric(), cfg);
  EXPECT_EQ(v.verdict, Verdict::kNearDegenerate);
  EXPECT_NEAR(v.lambda_min_n, 0.2, 1e-15);
  cfg.tau_lambda = 0.1;  // lambda_min = 2 tau
  v = degeneracy_from_curvature(H, Metric(), cfg);
  EXPECT_EQ(v.verdict, Verdict::kHealthy);
  EXPECT_EQ(v.tau_lambda, 0.1);
}

TEST(DetectDegeneracy, EmptyObservableSetIsNearDegenerate) {
  DetectorConfig cfg;
  cfg.tau_lambda = 1e-3;
  const DegeneracyVerdict v = degeneracy_from_curvature(Mat6::Zero(), Metric(), cfg);
  EXPECT_EQ(v.verdict, Verdict::kNearDegenerate);
  EXPECT_EQ(v.lambda_min_n, 0.0);
}

TEST(DetectDegeneracy, DefaultThresholdIsRelativeToLambdaMax) {
  const Mat6 H = Mat6(Vec6(1e-7, 1, 2, 3, 4, 5).asDiagonal());
  const DegeneracyVerdict v = degeneracy_from_curvature(H, Metric(), DetectorConfig());
  EXPECT_NEAR(v.tau_lambda, 5e-6, 1e-20);
  EXPECT_EQ(v.verdict, Verdict::kNearDegenerate);
}

TEST(DetectDegeneracy, LambdaMinMatchesCholeskyOracle) {
  Gen gen(86);
  for (int k = 0; k < 50; ++k) {
    const Pose g = gen.pose();
    const ObservationSet set = noisy_scene(gen, g, 30);
    const Metric G(gen.spd(0.2));
    DetectorConfig cfg;
    cfg.tau_lambda = 1.0;
    const DegeneracyVerdict v = detect_degeneracy(set, g, G, cfg);
    const double ref = lambda_min_reference(empirical_curvature(set, g), G.matrix());
    EXPECT_NEAR(v.lambda_min_n, ref, 1e-9 * ref);
    EXPECT_EQ(v.verdict == Verdict::kNearDegenerate, v.lambda_min_n < 1.0);
  }
}

TEST(DetectDegeneracy, RaisingTauNeverClearsVerdict) {
  Gen gen(87);
  const Pose g = gen.pose();
  const ObservationSet set = noisy_scene(gen, g, 30);
  bool seen = false;
  for (double tau = 1e-4; tau < 1e6; tau *= 3) {
    DetectorConfig cfg;
    cfg.tau_lambda = tau;
    const bool degenerate = detect_degeneracy(set, g, Metric(), cfg).verdict == Verdict::kNearDegenerate;
    if (seen) EXPECT_TRUE(degenerate);
    seen = seen || degenerate;
  }
  EXPECT_TRUE(seen);
}

TEST(DetectDegeneracy, DepthScalingFlipsVerdict) {
  Gen gen(88);
  std::vector<Vec3> unit;
  for (int i = 0; i < 100; ++i) unit.push_back(gen.point_in_front(Pose(), 1.0, 2.0));
  DetectorConfig cfg;
  cfg.tau_lambda = 1e-3;
  std::vector<Verdict> verdicts;
  for (double d : {1.0, 10.0, 100.0, 1000.0}) {
    ObservationSet set;
    for (std::size_t i = 0; i < unit.size(); ++i) {
      set.landmarks.push_back(d * unit[i]);
      set.observations.push_back({project(d * unit[i]), i});
    }
    verdicts.push_back(detect_degeneracy(set, Pose(), Metric(), cfg).verdict);
  }
  EXPECT_EQ(verdicts.front(), Verdict::kHealthy);
  EXPECT_EQ(verdicts.back(), Verdict::kNearDegenerate);
  for (std::size_t i = 1; i < verdicts.size(); ++i) {
    if (verdicts[i - 1] == Verdict::kNearDegenerate) EXPECT_EQ(verdicts[i], Verdict::kNearDegenerate);
  }
}

TEST(CollapseTest, ZeroPerturbationExamples) {
  const CurvatureSpectrum spec = g_eigendecompose(Mat6(Vec6(0.5, 1, 2, 3, 4, 5).asDiagonal()), Metric());
  DetectorConfig cfg;
  cfg.tau_lambda = 1.0;  // lambda_min = tau / 2
  CollapseCheck c = verify_collapse_test(spec, Mat6::Zero(), cfg);
  EXPECT_TRUE(c.branch1_applies);
  EXPECT_TRUE(c.branch1_holds);
  EXPECT_TRUE(c.flagged);
  EXPECT_TRUE(c.passed());

  cfg.tau_lambda = 0.5 / 3.0;  // lambda_min = 3 tau
  c = verify_collapse_test(spec, Mat6::Zero(), cfg);
  EXPECT_TRUE(c.branch2_applies);
  EXPECT_TRUE(c.branch2_holds);
  EXPECT_FALSE(c.flagged);
  EXPECT_TRUE(c.passed());
}

TEST(CollapseTest, RejectsLargeOrAsymmetricPerturbation) {
  const CurvatureSpectrum spec = g_eigendecompose(Mat6(Vec6(0.5, 1, 2, 3, 4, 5).asDiagonal()), Metric());
  DetectorConfig cfg;
  cfg.tau_lambda = 1.0;
  EXPECT_THROW(verify_collapse_test(spec, 0.3 * Mat6::Identity(), cfg), ContractError);
  Mat6 asym = Mat6::Zero();
  asym(0, 1) = 0.01;
  EXPECT_THROW(verify_collapse_test(spec, asym, cfg), ContractError);
  EXPECT_THROW(verify_collapse_test(spec, Mat6::Zero(), DetectorConfig()), ContractError);
}

TEST(CollapseTest, RandomAdmissiblePerturbations) {
  Gen gen(89);
  int violations = 0, branch1 = 0, branch2 = 0;
  for (int k = 0; k < 1000; ++k) {
    const Metric G(gen.spd(0.3));
    Vec6 lambda;
    for (int i = 0; i < 6; ++i) lambda[i] = std::exp(gen.uniform(-4, 2));
    const Mat6 A = gen.spd(0.3);
    // H with the chosen G-eigenvalues and G-orthonormal eigenvectors.
    const Mat6 L = G.matrix().llt().matrixL();
    const Eigen::HouseholderQR<Mat6> qr(A);
    const Mat6 Q = qr.householderQ();
    const Mat6 V = L.transpose().inverse() * Q;
    const Mat6 GV = G.matrix() * V;
    const Mat6 H = GV * lambda.asDiagonal() * GV.transpose();
    const CurvatureSpectrum spec = g_eigendecompose(0.5 * (H + H.transpose()), G);
    const double lmin = lambda.minCoeff();

    // E with ||B^T E B|| = s lambda_min / 2 for a G-orthonormal basis B.
    const Mat6 S = gen.symmetric();
    const double target = gen.uniform(0.0, 0.99) * 0.5 * lmin;
    // B = L^{-T} is G-orthonormal and B^T (L S L^T) B = S.
    const Mat6 E = L * S * L.transpose() * (target / symmetric_op_norm(S));
    DetectorConfig cfg;
    cfg.tau_lambda = lmin * std::pow(10.0, gen.uniform(-1, 1));
    const CollapseCheck c = verify_collapse_test(spec, 0.5 * (E + E.transpose()), cfg);
    EXPECT_NEAR(c.lambda_min, lmin, 1e-9 * lambda.maxCoeff());
    branch1 += c.branch1_applies;
    branch2 += c.branch2_applies;
    violations += !c.passed();
  }
  EXPECT_EQ(violations, 0);
  EXPECT_GT(branch1, 50);
  EXPECT_GT(branch2, 50);
}

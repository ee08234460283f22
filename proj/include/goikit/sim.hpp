#pragma once

// Synthetic scenes and the Monte Carlo harnesses behind the experiment CLI.
//
// Landmarks are drawn uniformly in normalized image coordinates
// (|u|, |v| <= fov_margin) and uniformly in depth over
// depth_scale * [depth_min, depth_max], in the frame of pose_true. Vanishing
// parallax is emulated by raising depth_scale: ||J_t|| falls like 1/d while
// the angular layout of the scene stays fixed.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "goikit/curvature.hpp"
#include "goikit/estimator.hpp"
#include "goikit/random.hpp"

namespace goikit::sim {

enum class BiasMode { kRandom, kWeakAligned };

struct SceneSpec {
  std::size_t n_points = 200;
  double depth_min = 2.0;
  double depth_max = 10.0;
  double fov_margin = 0.5;
  Pose pose_true;
  /// Isotropic image noise std; Sigma = sigma^2 I.
  double sigma = 1e-3;
  double depth_scale = 1.0;
  double dynamic_fraction = 0.0;
  double bias_magnitude = 0.0;
  BiasMode bias_mode = BiasMode::kRandom;

  /// Throws ConfigError on an infeasible frustum or out-of-range fractions.
  void validate() const;
  NoiseModel noise() const;
};

/// Pose used by the default experiments: a modest rotation and a small offset.
Pose default_pose();

struct GeneratedScene {
  ObservationSet set;
  /// Exact residual split at pose_true: r = r_static + b_dynamic.
  std::vector<Vec2> r_static;
  std::vector<Vec2> b_dynamic;
  /// Weakest observable eigen-direction of the population curvature used to
  /// align biases (empty when no dynamic features were requested).
  std::optional<CurvatureSpectrum> population_spectrum;
};

Landmark sample_landmark(const SceneSpec& spec, RngStream& rng);
std::vector<Landmark> sample_landmarks(const SceneSpec& spec, std::size_t n, RngStream& rng);

/// Weak-aligned bias: the 2-vector of norm `magnitude` maximizing
/// |<P_O G^{-1} J^T W b, v_1>_G| for the feature at X.
Vec2 weak_aligned_bias(const Pose& g_star, const Landmark& X, const Mat2& W,
                       const CurvatureSpectrum& spec, double magnitude);

GeneratedScene generate_scene(const SceneSpec& spec, RngStream& rng,
                              const Metric& G = Metric::identity());

/// One row of experiment output.
struct TrialRecord {
  std::string experiment;
  std::size_t n = 0;
  double d = 0.0;
  std::size_t trial = 0;
  std::string statistic;
  double value = 0.0;
  std::uint64_t seed = 0;
};

/// Summary scalars in insertion order, plus the raw records.
struct ExperimentResult {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<TrialRecord> records;
  std::vector<std::pair<std::string, double>> summary;

  double summary_value(const std::string& key) const;
};

// ---------------------------------------------------------------------------
// Fisher information vs Gauss-Newton curvature

struct FisherCheck {
  Mat6 H;       // exact average J^T W J over the landmark population
  Mat6 E_hat;   // Monte Carlo mean of psi psi^T at the true pose
  double deviation = 0.0;  // ||E_hat - H||_F / ||H||_F
};

/// spec.n_points landmarks are drawn once; each of the n_mc draws picks a
/// landmark uniformly and a noise sample. Requires sigma > 0.
FisherCheck fisher_check(const SceneSpec& spec, std::size_t n_mc, std::uint64_t seed,
                         unsigned threads = 1);

ExperimentResult fisher_experiment(const SceneSpec& spec, const std::vector<std::size_t>& n_grid,
                                   std::uint64_t seed, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Curvature concentration

struct ConcentrationConfig {
  std::vector<std::size_t> n_grid{100, 1000, 10000, 100000};
  std::size_t trials = 100;
  /// Sample size of the frozen population reference.
  std::size_t reference_size = 10'000'000;
  double quantile = 0.9;
  unsigned threads = 1;
};

/// Population curvature estimated from `size` continuous-frustum draws.
Mat6 reference_curvature(const SceneSpec& spec, std::size_t size, std::uint64_t seed,
                         unsigned threads = 1);

/// H_n from n fresh landmarks per trial; records ||H_n - H||_op and the
/// per-n quantile.
ExperimentResult concentration_experiment(const SceneSpec& spec, const ConcentrationConfig& cfg,
                                          std::uint64_t seed);

/// ||H_n - H||_op when H_n averages the first n members of a fixed population
/// and H averages all of it (no resampling).
double finite_population_deviation(const std::vector<Landmark>& population, std::size_t n,
                                   const Pose& g_star, const Mat2& W);

// ---------------------------------------------------------------------------
// Depth-scaling degeneracy sweep

struct SweepPoint {
  double d = 0.0;
  Mat6 H = Mat6::Zero();
  Vec6 eigenvalues = Vec6::Zero();
  /// Fraction of each eigenvector's squared norm in the translational block.
  Vec6 translational_weight = Vec6::Zero();
  double mean_jt_norm = 0.0;
  std::size_t observable_count = 0;
};

/// Same normalized landmark draws at every depth scale, population curvature
/// at pose_true.
std::vector<SweepPoint> degeneracy_sweep(const SceneSpec& spec, const std::vector<double>& d_grid,
                                         std::uint64_t seed,
                                         const Metric& G = Metric::identity());

ExperimentResult degeneracy_experiment(const SceneSpec& spec, const std::vector<double>& d_grid,
                                       std::uint64_t seed, double tau_lambda = 0.0);

// ---------------------------------------------------------------------------
// Gauss-Newton stability on the observable subspace

struct StabilityConfig {
  std::vector<std::size_t> n_grid{100, 300, 1000, 3000, 10000};
  std::vector<double> d_grid{1.0, 3.0, 10.0, 30.0, 100.0};
  std::size_t trials = 40;
  SolverConfig solver;
  unsigned threads = 1;
  /// n used for the lambda_min sweep, and d used for the n sweep.
  std::size_t n_for_d_sweep = 1000;
  double d_for_n_sweep = 1.0;
};

/// Per (n, d, trial): fresh noisy scene, solve from g0 = g*, record the
/// observable error G-norm, lambda_min of H_n at g*, and solver failures.
ExperimentResult stability_experiment(const SceneSpec& spec, const StabilityConfig& cfg,
                                      std::uint64_t seed);

}  // namespace goikit::sim

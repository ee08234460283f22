#pragma once

// Gauss-Newton pose estimation on the observable subspace, and the
// epsilon-contamination solve used as the finite-difference oracle for the
// influence function.

#include <optional>
#include <vector>

#include "goikit/curvature.hpp"

namespace goikit {

struct SolverConfig {
  int max_iters = 50;
  /// Converged once the update's G-norm drops below this.
  double step_tol = 1e-12;
  /// Stops without updating once ||P_O G^{-1} U_n||_G drops below this.
  double residual_tol = 1e-15;
  /// Basin guard: an update with G-norm above r0 aborts the solve.
  double r0 = 1.0;
  double rank_threshold = kDefaultRankThreshold;

  void validate() const;
};

struct SolveResult {
  Pose g_hat;
  int iterations = 0;
  bool converged = false;
  /// ||P_O G^{-1} U_n(g_hat)||_G.
  double final_score_norm = 0.0;
  /// P_O log(g_hat g*^{-1}) when the true pose was supplied.
  std::optional<Twist> xi_error_O;
  /// ||P_O G^{-1} U_n(g_k)||_G at the start of every iteration.
  std::vector<double> score_norm_history;
  /// G-norm of the last applied update.
  double last_step_norm = 0.0;
};

/// U_n(g) = (1/n) sum_i psi(z_i, g).
Twist empirical_score(const ObservationSet& set, const Pose& g);

/// Iterates xi = -H_OO^{-1} P_O G^{-1} U_n(g), g <- exp(xi) g with H_n
/// re-evaluated at each iterate. Throws BasinEscapeError when a step exceeds
/// cfg.r0 and DegeneracyError when I_O becomes empty.
SolveResult gauss_newton(const ObservationSet& set, const Pose& g0, const Metric& G,
                         const SolverConfig& cfg,
                         const std::optional<Pose>& g_star = std::nullopt);

/// Same iteration for (1 - eps) U_n + eps psi(z_extra, .) = 0 on O.
/// eps must lie in [0, 0.5]; eps = 0 reproduces gauss_newton exactly.
SolveResult contaminated_solve(const ObservationSet& set, const Observation& z_extra,
                               const Landmark& X_extra, double epsilon, const Pose& g0,
                               const Metric& G, const SolverConfig& cfg,
                               const std::optional<Pose>& g_star = std::nullopt);

/// P_O log(g_hat g*^{-1}). Propagates DomainError from the logarithm.
Twist error_twist(const Pose& g_hat, const Pose& g_star, const CurvatureSpectrum& spec);

}  // namespace goikit

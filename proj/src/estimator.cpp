#include "goikit/estimator.hpp"

#include <string>

#include "goikit/errors.hpp"
#include "goikit/kernels.hpp"

namespace goikit {

void SolverConfig::validate() const {
  if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (!(step_tol > 0.0) || !(residual_tol > 0.0) || !(r0 > 0.0) || !(rank_threshold > 0.0)) {
    throw ConfigError("solver tolerances must be positive");
  }
}

namespace {

struct Linearization {
  Mat6 H;
  Twist U;
};

// Averaged curvature and score at g in one kernel pass.
Linearization linearize(const ObservationSet& set, const Pose& g) {
  const std::size_t n = set.size();
  std::vector<double> xs(n), ys(n), zs(n), ru(n), rv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Landmark& X = set.landmark_of(i);
    const Vec2 r = residual(set.observations[i].z, g, X);
    xs[i] = X.x();
    ys[i] = X.y();
    zs[i] = X.z();
    ru[i] = r.x();
    rv[i] = r.y();
  }
  kernels::Accumulator acc;
  kernels::accumulate_scores(kernels::active_level(), g, set.noise.W(), {xs, ys, zs},
                             {ru, rv}, acc);
  const double inv_n = 1.0 / static_cast<double>(n);
  return {acc.curvature_matrix() * inv_n, acc.score_vector() * inv_n};
}

struct Contamination {
  const Observation& z;
  const Landmark& X;
  double epsilon;
};

SolveResult solve(const ObservationSet& set, const Pose& g0, const Metric& G,
                  const SolverConfig& cfg, const Contamination* extra,
                  const std::optional<Pose>& g_star) {
  cfg.validate();
  set.validate();

  SolveResult out;
  out.g_hat = g0;
  std::optional<CurvatureSpectrum> spec;
  Twist rep_O = Twist::Zero();

  auto evaluate = [&](const Pose& g) {
    Linearization lin = linearize(set, g);
    if (extra) {
      const Mat26 J = jacobian(g, extra->X);
      const Mat2& W = set.noise.W();
      const double e = extra->epsilon;
      lin.H = (1.0 - e) * lin.H + e * (J.transpose() * W * J);
      lin.U = (1.0 - e) * lin.U + e * score(extra->z.z, g, extra->X, W);
    }
    spec.emplace(g_eigendecompose(lin.H, G, cfg.rank_threshold));
    if (spec->empty()) {
      throw DegeneracyError("gauss_newton: restricted curvature is singular");
    }
    rep_O = project_observable(score_representer(lin.U, G), *spec);
    return g_norm(rep_O, G);
  };

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const double score_norm = evaluate(out.g_hat);
    out.score_norm_history.push_back(score_norm);
    out.iterations = it;
    if (score_norm < cfg.residual_tol) {
      out.last_step_norm = 0.0;
      out.converged = true;
      break;
    }
    const Twist xi = -apply_restricted_inverse(rep_O, *spec);
    const double step = g_norm(xi, G);
    if (step > cfg.r0) {
      throw BasinEscapeError("gauss_newton: update norm " + std::to_string(step) +
                             " exceeds basin radius r0");
    }
    out.g_hat = left_update(out.g_hat, xi);
    out.last_step_norm = step;
    if (step < cfg.step_tol) {
      out.converged = true;
      break;
    }
  }
  out.final_score_norm = evaluate(out.g_hat);
  if (g_star) out.xi_error_O = error_twist(out.g_hat, *g_star, *spec);
  return out;
}

}  // namespace

Twist empirical_score(const ObservationSet& set, const Pose& g) {
  set.validate();
  return linearize(set, g).U;
}

SolveResult gauss_newton(const ObservationSet& set, const Pose& g0, const Metric& G,
                         const SolverConfig& cfg, const std::optional<Pose>& g_star) {
  return solve(set, g0, G, cfg, nullptr, g_star);
}

SolveResult contaminated_solve(const ObservationSet& set, const Observation& z_extra,
                               const Landmark& X_extra, double epsilon, const Pose& g0,
                               const Metric& G, const SolverConfig& cfg,
                               const std::optional<Pose>& g_star) {
  if (!(epsilon >= 0.0 && epsilon <= 0.5)) {
    throw ConfigError("contamination epsilon must lie in [0, 0.5]");
  }
  if (epsilon == 0.0) return solve(set, g0, G, cfg, nullptr, g_star);
  const Contamination extra{z_extra, X_extra, epsilon};
  return solve(set, g0, G, cfg, &extra, g_star);
}

Twist error_twist(const Pose& g_hat, const Pose& g_star, const CurvatureSpectrum& spec) {
  return project_observable(log_se3(compose(g_hat, inverse(g_star))), spec);
}

}  // namespace goikit

#pragma once

// Batched accumulation of per-feature curvature and score terms.
//
// Every variant computes, for world points X_k and optional residuals r_k,
//   curvature   += sum_k J_k^T W J_k
//   score_outer += sum_k psi_k psi_k^T,   psi_k = J_k^T W r_k
//   score       += sum_k psi_k
// with J_k the left-trivialized reprojection Jacobian at pose g. The scalar
// variant is the reference; vector variants must agree with it to rounding.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

#include "goikit/lie.hpp"

namespace goikit::kernels {

enum class SimdLevel { kScalar, kAvx2 };

std::string_view name(SimdLevel level);
bool is_supported(SimdLevel level);

/// Best level the running CPU supports. The GOIKIT_SIMD environment variable
/// ("scalar" or "avx2") can force a lower level.
SimdLevel active_level();

/// Number of entries in the packed upper triangle of a symmetric 6x6.
inline constexpr std::size_t kPacked6 = 21;
using Packed6 = std::array<double, kPacked6>;

Mat6 unpack(const Packed6& p);

struct Accumulator {
  Packed6 curvature{};
  Packed6 score_outer{};
  std::array<double, 6> score{};
  std::size_t count = 0;

  Mat6 curvature_matrix() const { return unpack(curvature); }
  Mat6 score_outer_matrix() const { return unpack(score_outer); }
  Vec6 score_vector() const;
  void merge(const Accumulator& other);
};

/// Structure-of-arrays world points. All spans have equal length.
struct PointBatch {
  std::span<const double> x, y, z;
  std::size_t size() const { return x.size(); }
};

/// Structure-of-arrays residuals, one per point.
struct ResidualBatch {
  std::span<const double> u, v;
};

/// Adds sum J^T W J over the batch. Throws DomainError if any point has
/// camera depth <= kDepthMin.
void accumulate_curvature(SimdLevel level, const Pose& g, const Mat2& W,
                          PointBatch points, Accumulator& acc);

/// Adds curvature, score outer products and score sums over the batch.
void accumulate_scores(SimdLevel level, const Pose& g, const Mat2& W,
                       PointBatch points, ResidualBatch residuals,
                       Accumulator& acc);

namespace detail {
// Per-level entry points; `residuals` may be null for curvature only.
void accumulate_scalar(const Pose& g, const Mat2& W, PointBatch points,
                       const ResidualBatch* residuals, Accumulator& acc);
void accumulate_avx2(const Pose& g, const Mat2& W, PointBatch points,
                     const ResidualBatch* residuals, Accumulator& acc);
}  // namespace detail

}  // namespace goikit::kernels

#include <cstdlib>
#include <string>

#include "goikit/errors.hpp"
#include "goikit/kernels.hpp"

namespace goikit::kernels {

std::string_view name(SimdLevel level) {
  switch (level) {
    case SimdLevel::kScalar:
      return "scalar";
    case SimdLevel::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool is_supported(SimdLevel level) {
  switch (level) {
    case SimdLevel::kScalar:
      return true;
    case SimdLevel::kAvx2:
#if defined(GOIKIT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

namespace {

SimdLevel detect() {
  SimdLevel best = is_supported(SimdLevel::kAvx2) ? SimdLevel::kAvx2 : SimdLevel::kScalar;
  if (const char* forced = std::getenv("GOIKIT_SIMD")) {
    const std::string s(forced);
    if (s == "scalar") return SimdLevel::kScalar;
  }
  return best;
}

}  // namespace

SimdLevel active_level() {
  static const SimdLevel level = detect();
  return level;
}

Mat6 unpack(const Packed6& p) {
  Mat6 M;
  std::size_t k = 0;
  for (int i = 0; i < 6; ++i) {
    for (int j = i; j < 6; ++j) {
      M(i, j) = p[k];
      M(j, i) = p[k];
      ++k;
    }
  }
  return M;
}

Vec6 Accumulator::score_vector() const {
  return Eigen::Map<const Vec6>(score.data());
}

void Accumulator::merge(const Accumulator& other) {
  for (std::size_t k = 0; k < kPacked6; ++k) {
    curvature[k] += other.curvature[k];
    score_outer[k] += other.score_outer[k];
  }
  for (std::size_t k = 0; k < 6; ++k) score[k] += other.score[k];
  count += other.count;
}

namespace {

void check_batch(PointBatch points, const ResidualBatch* residuals) {
  const std::size_t n = points.size();
  if (points.y.size() != n || points.z.size() != n) {
    throw ContractError("point batch spans differ in length");
  }
  if (residuals && (residuals->u.size() != n || residuals->v.size() != n)) {
    throw ContractError("residual batch length differs from point batch");
  }
}

void dispatch(SimdLevel level, const Pose& g, const Mat2& W, PointBatch points,
              const ResidualBatch* residuals, Accumulator& acc) {
  check_batch(points, residuals);
  switch (level) {
    case SimdLevel::kScalar:
      detail::accumulate_scalar(g, W, points, residuals, acc);
      return;
    case SimdLevel::kAvx2:
      if (!is_supported(SimdLevel::kAvx2)) {
        throw ConfigError("AVX2 kernel requested on a CPU without AVX2/FMA");
      }
      detail::accumulate_avx2(g, W, points, residuals, acc);
      return;
  }
}

}  // namespace

void accumulate_curvature(SimdLevel level, const Pose& g, const Mat2& W,
                          PointBatch points, Accumulator& acc) {
  dispatch(level, g, W, points, nullptr, acc);
}

void accumulate_scores(SimdLevel level, const Pose& g, const Mat2& W,
                       PointBatch points, ResidualBatch residuals,
                       Accumulator& acc) {
  dispatch(level, g, W, points, &residuals, acc);
}

}  // namespace goikit::kernels

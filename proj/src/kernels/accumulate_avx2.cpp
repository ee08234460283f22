#include "goikit/camera.hpp"
#include "goikit/errors.hpp"
#include "goikit/kernels.hpp"

#if defined(GOIKIT_HAVE_AVX2)
#include <immintrin.h>
#endif

namespace goikit::kernels::detail {

#if defined(GOIKIT_HAVE_AVX2)

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

// Four points per iteration; the remainder goes through the scalar kernel.
void accumulate_avx2(const Pose& g, const Mat2& W, PointBatch points,
                     const ResidualBatch* residuals, Accumulator& acc) {
  const std::size_t n = points.size();
  const std::size_t n_vec = n - n % 4;

  const Mat3& R = g.R();
  __m256d r[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = _mm256_set1_pd(R(i, j));
  const __m256d t0 = _mm256_set1_pd(g.t()[0]);
  const __m256d t1 = _mm256_set1_pd(g.t()[1]);
  const __m256d t2 = _mm256_set1_pd(g.t()[2]);
  const __m256d w00 = _mm256_set1_pd(W(0, 0));
  const __m256d w01 = _mm256_set1_pd(0.5 * (W(0, 1) + W(1, 0)));
  const __m256d w11 = _mm256_set1_pd(W(1, 1));
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d depth_min = _mm256_set1_pd(kDepthMin);

  __m256d curv[kPacked6];
  __m256d outer[kPacked6];
  __m256d score[6];
  for (auto& a : curv) a = _mm256_setzero_pd();
  for (auto& a : outer) a = _mm256_setzero_pd();
  for (auto& a : score) a = _mm256_setzero_pd();

  for (std::size_t k = 0; k < n_vec; k += 4) {
    const __m256d X0 = _mm256_loadu_pd(points.x.data() + k);
    const __m256d X1 = _mm256_loadu_pd(points.y.data() + k);
    const __m256d X2 = _mm256_loadu_pd(points.z.data() + k);
    const __m256d d0 = _mm256_sub_pd(X0, t0);
    const __m256d d1 = _mm256_sub_pd(X1, t1);
    const __m256d d2 = _mm256_sub_pd(X2, t2);
    __m256d y[3];
    for (int c = 0; c < 3; ++c) {
      y[c] = _mm256_fmadd_pd(r[2][c], d2,
                             _mm256_fmadd_pd(r[1][c], d1, _mm256_mul_pd(r[0][c], d0)));
    }
    // NaN depths compare false and are rejected too.
    const __m256d ok = _mm256_cmp_pd(y[2], depth_min, _CMP_GT_OQ);
    if (_mm256_movemask_pd(ok) != 0xF) {
      throw DomainError("curvature kernel: point depth below depth_min");
    }
    const __m256d iz = _mm256_div_pd(one, y[2]);
    const __m256d u = _mm256_mul_pd(y[0], iz);
    const __m256d v = _mm256_mul_pd(y[1], iz);

    __m256d j0[6], j1[6];
    for (int c = 0; c < 3; ++c) {
      j0[c] = _mm256_mul_pd(iz, _mm256_fnmadd_pd(u, r[c][2], r[c][0]));
      j1[c] = _mm256_mul_pd(iz, _mm256_fnmadd_pd(v, r[c][2], r[c][1]));
    }
    j0[3] = _mm256_fmsub_pd(X1, j0[2], _mm256_mul_pd(X2, j0[1]));
    j0[4] = _mm256_fmsub_pd(X2, j0[0], _mm256_mul_pd(X0, j0[2]));
    j0[5] = _mm256_fmsub_pd(X0, j0[1], _mm256_mul_pd(X1, j0[0]));
    j1[3] = _mm256_fmsub_pd(X1, j1[2], _mm256_mul_pd(X2, j1[1]));
    j1[4] = _mm256_fmsub_pd(X2, j1[0], _mm256_mul_pd(X0, j1[2]));
    j1[5] = _mm256_fmsub_pd(X0, j1[1], _mm256_mul_pd(X1, j1[0]));

    __m256d k0[6], k1[6];
    for (int c = 0; c < 6; ++c) {
      k0[c] = _mm256_fmadd_pd(w01, j1[c], _mm256_mul_pd(w00, j0[c]));
      k1[c] = _mm256_fmadd_pd(w11, j1[c], _mm256_mul_pd(w01, j0[c]));
    }
    std::size_t p = 0;
    for (int i = 0; i < 6; ++i) {
      for (int j = i; j < 6; ++j) {
        curv[p] = _mm256_fmadd_pd(j1[i], k1[j], _mm256_fmadd_pd(j0[i], k0[j], curv[p]));
        ++p;
      }
    }

    if (residuals) {
      const __m256d ru = _mm256_loadu_pd(residuals->u.data() + k);
      const __m256d rv = _mm256_loadu_pd(residuals->v.data() + k);
      const __m256d wr0 = _mm256_fmadd_pd(w01, rv, _mm256_mul_pd(w00, ru));
      const __m256d wr1 = _mm256_fmadd_pd(w11, rv, _mm256_mul_pd(w01, ru));
      __m256d psi[6];
      for (int c = 0; c < 6; ++c) {
        psi[c] = _mm256_fmadd_pd(j1[c], wr1, _mm256_mul_pd(j0[c], wr0));
      }
      p = 0;
      for (int i = 0; i < 6; ++i) {
        score[i] = _mm256_add_pd(score[i], psi[i]);
        for (int j = i; j < 6; ++j) {
          outer[p] = _mm256_fmadd_pd(psi[i], psi[j], outer[p]);
          ++p;
        }
      }
    }
  }

  for (std::size_t p = 0; p < kPacked6; ++p) {
    acc.curvature[p] += hsum(curv[p]);
    if (residuals) acc.score_outer[p] += hsum(outer[p]);
  }
  if (residuals) {
    for (int i = 0; i < 6; ++i) acc.score[i] += hsum(score[i]);
  }
  acc.count += n_vec;

  if (n_vec < n) {
    const PointBatch tail{points.x.subspan(n_vec), points.y.subspan(n_vec),
                          points.z.subspan(n_vec)};
    if (residuals) {
      const ResidualBatch rtail{residuals->u.subspan(n_vec), residuals->v.subspan(n_vec)};
      accumulate_scalar(g, W, tail, &rtail, acc);
    } else {
      accumulate_scalar(g, W, tail, nullptr, acc);
    }
  }
}

#else

void accumulate_avx2(const Pose&, const Mat2&, PointBatch, const ResidualBatch*,
                     Accumulator&) {
  throw ConfigError("library built without AVX2 kernels");
}

#endif

}  // namespace goikit::kernels::detail

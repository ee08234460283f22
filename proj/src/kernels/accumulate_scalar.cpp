#include "goikit/camera.hpp"
#include "goikit/errors.hpp"
#include "goikit/kernels.hpp"

namespace goikit::kernels::detail {

void accumulate_scalar(const Pose& g, const Mat2& W, PointBatch points,
                       const ResidualBatch* residuals, Accumulator& acc) {
  const Mat3& R = g.R();
  const Vec3& t = g.t();
  const double w00 = W(0, 0), w01 = 0.5 * (W(0, 1) + W(1, 0)), w11 = W(1, 1);

  for (std::size_t k = 0; k < points.size(); ++k) {
    const double X0 = points.x[k], X1 = points.y[k], X2 = points.z[k];
    const double d0 = X0 - t[0], d1 = X1 - t[1], d2 = X2 - t[2];
    const double y0 = R(0, 0) * d0 + R(1, 0) * d1 + R(2, 0) * d2;
    const double y1 = R(0, 1) * d0 + R(1, 1) * d1 + R(2, 1) * d2;
    const double y2 = R(0, 2) * d0 + R(1, 2) * d1 + R(2, 2) * d2;
    if (!(y2 > kDepthMin)) {
      throw DomainError("curvature kernel: point depth below depth_min");
    }
    const double iz = 1.0 / y2;
    const double u = y0 * iz, v = y1 * iz;

    // Rows of A = dpi(y) R^T, then rotational rows X x a.
    double j0[6], j1[6];
    for (int c = 0; c < 3; ++c) {
      j0[c] = iz * (R(c, 0) - u * R(c, 2));
      j1[c] = iz * (R(c, 1) - v * R(c, 2));
    }
    j0[3] = X1 * j0[2] - X2 * j0[1];
    j0[4] = X2 * j0[0] - X0 * j0[2];
    j0[5] = X0 * j0[1] - X1 * j0[0];
    j1[3] = X1 * j1[2] - X2 * j1[1];
    j1[4] = X2 * j1[0] - X0 * j1[2];
    j1[5] = X0 * j1[1] - X1 * j1[0];

    double k0[6], k1[6];
    for (int c = 0; c < 6; ++c) {
      k0[c] = w00 * j0[c] + w01 * j1[c];
      k1[c] = w01 * j0[c] + w11 * j1[c];
    }
    std::size_t p = 0;
    for (int i = 0; i < 6; ++i) {
      for (int j = i; j < 6; ++j) {
        acc.curvature[p++] += j0[i] * k0[j] + j1[i] * k1[j];
      }
    }

    if (residuals) {
      const double ru = residuals->u[k], rv = residuals->v[k];
      const double wr0 = w00 * ru + w01 * rv;
      const double wr1 = w01 * ru + w11 * rv;
      double psi[6];
      for (int c = 0; c < 6; ++c) psi[c] = j0[c] * wr0 + j1[c] * wr1;
      p = 0;
      for (int i = 0; i < 6; ++i) {
        acc.score[i] += psi[i];
        for (int j = i; j < 6; ++j) acc.score_outer[p++] += psi[i] * psi[j];
      }
    }
  }
  acc.count += points.size();
}

}  // namespace goikit::kernels::detail

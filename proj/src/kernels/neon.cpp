#include <arm_neon.h>

#include <cmath>

#include "internal.hpp"

namespace obsvlab::kernels::neon {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  float64x2_t m = vdupq_n_f64(0.0);
  bool nan_seen = false;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    nan_seen = nan_seen || (vgetq_lane_u64(vceqq_f64(d, d), 0) == 0) ||
               (vgetq_lane_u64(vceqq_f64(d, d), 1) == 0);
    m = vmaxq_f64(m, d);
  }
  double r = vmaxvq_f64(m);
  if (nan_seen) r = std::nan("");
  for (; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (d > r || std::isnan(d)) r = d;
  }
  return r;
}

}  // namespace obsvlab::kernels::neon

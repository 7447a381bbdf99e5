#include "rmab/kernels.hpp"

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace rmab::kernels::neon {

void axpy(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vy = vld1q_f64(y + i);
    vy = vaddq_f64(vy, vmulq_f64(va, vld1q_f64(x + i)));
    vst1q_f64(y + i, vy);
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void add_scaled(const double* x, double a, const double* z, double* out, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vmulq_f64(va, vld1q_f64(z + i))));
  for (; i < n; ++i) out[i] = x[i] + a * z[i];
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vmaxq_f64(acc, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double m = vmaxvq_f64(acc);
  for (; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

std::pair<double, double> min_max_diff(const double* a, const double* b, std::size_t n) {
  if (n < 2) return scalar::min_max_diff(a, b, n);
  float64x2_t d0 = vsubq_f64(vld1q_f64(a), vld1q_f64(b));
  float64x2_t vlo = d0, vhi = d0;
  std::size_t i = 2;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    vlo = vminq_f64(vlo, d);
    vhi = vmaxq_f64(vhi, d);
  }
  double lo = vminvq_f64(vlo);
  double hi = vmaxvq_f64(vhi);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

}  // namespace rmab::kernels::neon

#include "rmab/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace rmab::kernels::scalar {

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void add_scaled(const double* x, double a, const double* z, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + a * z[i];
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

std::pair<double, double> min_max_diff(const double* a, const double* b, std::size_t n) {
  if (n == 0) return {0.0, 0.0};
  double lo = a[0] - b[0];
  double hi = lo;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = a[i] - b[i];
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

}  // namespace rmab::kernels::scalar

#include <cmath>

#include "obsvlab/kernels.hpp"

namespace obsvlab::kernels::scalar {

namespace {

constexpr std::size_t kBlock = 16;

// Pairwise summation of products; fixed split points give a reduction order
// that depends only on n.
double pairwise_dot(const double* a, const double* b, std::size_t n) {
  if (n <= kBlock) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_dot(a, b, half) + pairwise_dot(a + half, b + half, n - half);
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) { return pairwise_dot(a, b, n); }

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (d > m || std::isnan(d)) m = d;
  }
  return m;
}

}  // namespace obsvlab::kernels::scalar

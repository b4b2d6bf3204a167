#pragma once

#include <cstddef>

namespace obsvlab::kernels {

#if defined(OBSVLAB_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double max_abs_diff(const double* a, const double* b, std::size_t n);
}  // namespace avx2
#endif

#if defined(OBSVLAB_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double max_abs_diff(const double* a, const double* b, std::size_t n);
}  // namespace neon
#endif

}  // namespace obsvlab::kernels

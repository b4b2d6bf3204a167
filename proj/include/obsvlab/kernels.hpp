#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference version and,
// where the target supports it, an AVX2 or NEON version. The implementation
// is chosen once at startup from the host CPU; OBSVLAB_ISA=scalar|avx2|neon
// overrides the choice. Every vector variant is tested against the scalar
// reference.

#include <cstddef>
#include <span>
#include <string_view>

namespace obsvlab::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);
Isa active_isa();
// Throws std::invalid_argument if the host cannot run `isa`.
void set_active_isa(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
// out[lag] = sum_i x[i]*x[i+lag] / (n - lag) for lag in [0, out.size()).
void autocorrelation(std::span<const double> x, std::span<double> out);

struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*max_abs_diff)(const double*, const double*, std::size_t);
};

// Raw per-ISA tables, exposed for equivalence testing.
const KernelTable& table_for(Isa isa);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double max_abs_diff(const double* a, const double* b, std::size_t n);
}  // namespace scalar

}  // namespace obsvlab::kernels

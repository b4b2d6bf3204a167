#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "internal.hpp"
#include "obsvlab/kernels.hpp"

namespace obsvlab::kernels {

namespace {

constexpr KernelTable kScalar{&scalar::dot, &scalar::max_abs_diff};
#if defined(OBSVLAB_HAVE_AVX2)
constexpr KernelTable kAvx2{&avx2::dot, &avx2::max_abs_diff};
#endif
#if defined(OBSVLAB_HAVE_NEON)
constexpr KernelTable kNeon{&neon::dot, &neon::max_abs_diff};
#endif

Isa detect() {
  if (const char* forced = std::getenv("OBSVLAB_ISA")) {
    const std::string name(forced);
    if (name == "scalar") return Isa::Scalar;
    if (name == "avx2" && isa_available(Isa::Avx2)) return Isa::Avx2;
    if (name == "neon" && isa_available(Isa::Neon)) return Isa::Neon;
  }
  if (isa_available(Isa::Avx2)) return Isa::Avx2;
  if (isa_available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

const KernelTable& current() { return table_for(active().load(std::memory_order_relaxed)); }

void check_sizes(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kernel operands differ in length");
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(OBSVLAB_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(OBSVLAB_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return active().load(); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa))
    throw std::invalid_argument("instruction set '" + std::string(isa_name(isa)) +
                                "' is not available on this host");
  active().store(isa);
}

const KernelTable& table_for(Isa isa) {
  switch (isa) {
#if defined(OBSVLAB_HAVE_AVX2)
    case Isa::Avx2: return kAvx2;
#endif
#if defined(OBSVLAB_HAVE_NEON)
    case Isa::Neon: return kNeon;
#endif
    default: return kScalar;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_sizes(a, b);
  return current().dot(a.data(), b.data(), a.size());
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  check_sizes(a, b);
  return current().max_abs_diff(a.data(), b.data(), a.size());
}

void autocorrelation(std::span<const double> x, std::span<double> out) {
  if (out.size() > x.size()) throw std::invalid_argument("more lags than samples");
  const auto& k = current();
  const std::size_t n = x.size();
  for (std::size_t lag = 0; lag < out.size(); ++lag)
    out[lag] = k.dot(x.data(), x.data() + lag, n - lag) / static_cast<double>(n - lag);
}

}  // namespace obsvlab::kernels

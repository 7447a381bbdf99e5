#pragma once

// Dense double-precision inner loops used by the simplex tableau, the RK4
// integrator and the value-iteration stopping tests.
//
// Every kernel has a scalar reference in rmab::kernels::scalar and, where the
// target supports it, a vector variant (AVX2 on x86-64, NEON on aarch64).
// The public entry points dispatch once at first use based on the running
// CPU. The vector variants use separate multiply and add (no FMA) so their
// results are bit-identical to the scalar reference.

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>

namespace rmab::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

/// Instruction set selected by the dispatcher for this process.
Isa active_isa();

/// True if the variant for `isa` was compiled in and the CPU can run it.
bool isa_available(Isa isa);

/// Forces the dispatcher to a given variant (tests and benchmarks only).
/// Returns false and leaves the selection untouched if it is unavailable.
bool force_isa(Isa isa);

// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

// out = x + a * z
void add_scaled(std::span<const double> x, double a, std::span<const double> z,
                std::span<double> out);

// max_i |a_i - b_i|, 0 for empty input
double max_abs_diff(std::span<const double> a, std::span<const double> b);

// (min_i (a_i - b_i), max_i (a_i - b_i)); (0, 0) for empty input
std::pair<double, double> min_max_diff(std::span<const double> a, std::span<const double> b);

#define RMAB_KERNEL_DECLS                                                                      \
  void axpy(double a, const double* x, double* y, std::size_t n);                              \
  void add_scaled(const double* x, double a, const double* z, double* out, std::size_t n);     \
  double max_abs_diff(const double* a, const double* b, std::size_t n);                        \
  std::pair<double, double> min_max_diff(const double* a, const double* b, std::size_t n);

namespace scalar {
RMAB_KERNEL_DECLS
}
#if defined(RMAB_HAVE_AVX2)
namespace avx2 {
RMAB_KERNEL_DECLS
}
#endif
#if defined(RMAB_HAVE_NEON)
namespace neon {
RMAB_KERNEL_DECLS
}
#endif

#undef RMAB_KERNEL_DECLS

}  // namespace rmab::kernels

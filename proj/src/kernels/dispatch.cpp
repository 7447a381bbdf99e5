#include <atomic>
#include <cassert>

#include "rmab/kernels.hpp"

namespace rmab::kernels {

namespace {

struct Table {
  Isa isa;
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*add_scaled)(const double*, double, const double*, double*, std::size_t);
  double (*max_abs_diff)(const double*, const double*, std::size_t);
  std::pair<double, double> (*min_max_diff)(const double*, const double*, std::size_t);
};

constexpr Table kScalar{Isa::Scalar, scalar::axpy, scalar::add_scaled, scalar::max_abs_diff,
                        scalar::min_max_diff};
#if defined(RMAB_HAVE_AVX2)
constexpr Table kAvx2{Isa::Avx2, avx2::axpy, avx2::add_scaled, avx2::max_abs_diff,
                      avx2::min_max_diff};
#endif
#if defined(RMAB_HAVE_NEON)
constexpr Table kNeon{Isa::Neon, neon::axpy, neon::add_scaled, neon::max_abs_diff,
                      neon::min_max_diff};
#endif

const Table* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &kScalar;
    case Isa::Avx2:
#if defined(RMAB_HAVE_AVX2)
      if (__builtin_cpu_supports("avx2")) return &kAvx2;
#endif
      return nullptr;
    case Isa::Neon:
#if defined(RMAB_HAVE_NEON)
      return &kNeon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const Table* detect() {
  if (const Table* t = table_for(Isa::Avx2)) return t;
  if (const Table* t = table_for(Isa::Neon)) return t;
  return &kScalar;
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> t{detect()};
  return t;
}

const Table& active() { return *current().load(std::memory_order_relaxed); }

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

Isa active_isa() { return active().isa; }

bool isa_available(Isa isa) { return table_for(isa) != nullptr; }

bool force_isa(Isa isa) {
  const Table* t = table_for(isa);
  if (t == nullptr) return false;
  current().store(t, std::memory_order_relaxed);
  return true;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().axpy(a, x.data(), y.data(), y.size());
}

void add_scaled(std::span<const double> x, double a, std::span<const double> z,
                std::span<double> out) {
  assert(x.size() == out.size() && z.size() == out.size());
  active().add_scaled(x.data(), a, z.data(), out.data(), out.size());
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().max_abs_diff(a.data(), b.data(), a.size());
}

std::pair<double, double> min_max_diff(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().min_max_diff(a.data(), b.data(), a.size());
}

}  // namespace rmab::kernels

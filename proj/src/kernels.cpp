#include "mrflp/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

namespace mrflp::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void weighted_gram(std::size_t rows, std::size_t p, std::size_t q, const double* x, std::size_t ldx,
                   const double* w, const double* y, std::size_t ldy, double* c, std::size_t ldc) {
  for (std::size_t b = 0; b < q; ++b) {
    const double* yb = y + b * ldy;
    for (std::size_t a = 0; a < p; ++a) {
      const double* xa = x + a * ldx;
      double s = 0.0;
      for (std::size_t i = 0; i < rows; ++i) s += xa[i] * w[i] * yb[i];
      c[a + b * ldc] += s;
    }
  }
}

void pairwise_distance(std::size_t na, const double* ax, const double* ay, std::size_t nb,
                       const double* bx, const double* by, double* out, std::size_t ldo) {
  for (std::size_t j = 0; j < nb; ++j) {
    for (std::size_t i = 0; i < na; ++i) {
      const double dx = ax[i] - bx[j];
      const double dy = ay[i] - by[j];
      out[i + j * ldo] = std::sqrt(dx * dx + dy * dy);
    }
  }
}

}  // namespace scalar

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  Isa isa = detect_isa();
  if (const char* env = std::getenv("MRFLP_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") isa = Isa::Scalar;
  }
  return isa;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa detect_isa() { return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar; }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

Isa set_isa(Isa isa) {
  if (isa == Isa::Avx2 && !cpu_has_avx2()) isa = Isa::Scalar;
  current().store(isa, std::memory_order_relaxed);
  return isa;
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

double dot(const double* a, const double* b, std::size_t n) {
  return active_isa() == Isa::Avx2 ? avx2::dot(a, b, n) : scalar::dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  if (active_isa() == Isa::Avx2)
    avx2::axpy(alpha, x, y, n);
  else
    scalar::axpy(alpha, x, y, n);
}

void weighted_gram(std::size_t rows, std::size_t p, std::size_t q, const double* x, std::size_t ldx,
                   const double* w, const double* y, std::size_t ldy, double* c, std::size_t ldc) {
  if (active_isa() == Isa::Avx2)
    avx2::weighted_gram(rows, p, q, x, ldx, w, y, ldy, c, ldc);
  else
    scalar::weighted_gram(rows, p, q, x, ldx, w, y, ldy, c, ldc);
}

void pairwise_distance(std::size_t na, const double* ax, const double* ay, std::size_t nb,
                       const double* bx, const double* by, double* out, std::size_t ldo) {
  if (active_isa() == Isa::Avx2)
    avx2::pairwise_distance(na, ax, ay, nb, bx, by, out, ldo);
  else
    scalar::pairwise_distance(na, ax, ay, nb, bx, by, out, ldo);
}

}  // namespace mrflp::kernels

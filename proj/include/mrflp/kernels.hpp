#pragma once

// Data-parallel inner loops used by the block algebra and covariance
// assembly. Each kernel has a portable scalar reference and an AVX2+FMA
// variant; the variant is chosen once at runtime from CPUID and can be
// forced with MRFLP_KERNELS=scalar|avx2 or set_isa().

#include <cstddef>
#include <string_view>

namespace mrflp::kernels {

enum class Isa { Scalar, Avx2 };

/// Best instruction set supported by the running CPU.
Isa detect_isa();

/// Instruction set currently used by the dispatching entry points.
Isa active_isa();

/// Overrides the dispatch choice. Requesting Avx2 on a CPU without it
/// silently keeps Scalar; the return value is the isa actually in force.
Isa set_isa(Isa isa);

std::string_view isa_name(Isa isa);

// Every matrix argument is column-major with an explicit leading dimension.

double dot(const double* a, const double* b, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// C(p x q) += X(rows x p)^T diag(w) Y(rows x q)
void weighted_gram(std::size_t rows, std::size_t p, std::size_t q, const double* x, std::size_t ldx,
                   const double* w, const double* y, std::size_t ldy, double* c, std::size_t ldc);

// out(i, j) = |a_i - b_j| for planar points given as separate coordinate arrays.
void pairwise_distance(std::size_t na, const double* ax, const double* ay, std::size_t nb,
                       const double* bx, const double* by, double* out, std::size_t ldo);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void weighted_gram(std::size_t rows, std::size_t p, std::size_t q, const double* x, std::size_t ldx,
                   const double* w, const double* y, std::size_t ldy, double* c, std::size_t ldc);
void pairwise_distance(std::size_t na, const double* ax, const double* ay, std::size_t nb,
                       const double* bx, const double* by, double* out, std::size_t ldo);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void weighted_gram(std::size_t rows, std::size_t p, std::size_t q, const double* x, std::size_t ldx,
                   const double* w, const double* y, std::size_t ldy, double* c, std::size_t ldc);
void pairwise_distance(std::size_t na, const double* ax, const double* ay, std::size_t nb,
                       const double* bx, const double* by, double* out, std::size_t ldo);
}  // namespace avx2

}  // namespace mrflp::kernels

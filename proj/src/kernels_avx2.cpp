// Compiled with -mavx2 -mfma; only reached after the runtime CPU check.

#include "mrflp/kernels.hpp"

#include <cmath>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

namespace mrflp::kernels::avx2 {

#if defined(__AVX2__) && defined(__FMA__)

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void weighted_gram(std::size_t rows, std::size_t p, std::size_t q, const double* x, std::size_t ldx,
                   const double* w, const double* y, std::size_t ldy, double* c, std::size_t ldc) {
  for (std::size_t a = 0; a < p; ++a) {
    const double* xa = x + a * ldx;
    std::size_t b = 0;
    for (; b + 4 <= q; b += 4) {
      const double* y0 = y + b * ldy;
      const double* y1 = y0 + ldy;
      const double* y2 = y1 + ldy;
      const double* y3 = y2 + ldy;
      __m256d s0 = _mm256_setzero_pd();
      __m256d s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd();
      __m256d s3 = _mm256_setzero_pd();
      std::size_t i = 0;
      for (; i + 4 <= rows; i += 4) {
        const __m256d xw = _mm256_mul_pd(_mm256_loadu_pd(xa + i), _mm256_loadu_pd(w + i));
        s0 = _mm256_fmadd_pd(xw, _mm256_loadu_pd(y0 + i), s0);
        s1 = _mm256_fmadd_pd(xw, _mm256_loadu_pd(y1 + i), s1);
        s2 = _mm256_fmadd_pd(xw, _mm256_loadu_pd(y2 + i), s2);
        s3 = _mm256_fmadd_pd(xw, _mm256_loadu_pd(y3 + i), s3);
      }
      double t0 = hsum(s0), t1 = hsum(s1), t2 = hsum(s2), t3 = hsum(s3);
      for (; i < rows; ++i) {
        const double xw = xa[i] * w[i];
        t0 += xw * y0[i];
        t1 += xw * y1[i];
        t2 += xw * y2[i];
        t3 += xw * y3[i];
      }
      c[a + b * ldc] += t0;
      c[a + (b + 1) * ldc] += t1;
      c[a + (b + 2) * ldc] += t2;
      c[a + (b + 3) * ldc] += t3;
    }
    for (; b < q; ++b) {
      const double* yb = y + b * ldy;
      __m256d s = _mm256_setzero_pd();
      std::size_t i = 0;
      for (; i + 4 <= rows; i += 4) {
        const __m256d xw = _mm256_mul_pd(_mm256_loadu_pd(xa + i), _mm256_loadu_pd(w + i));
        s = _mm256_fmadd_pd(xw, _mm256_loadu_pd(yb + i), s);
      }
      double t = hsum(s);
      for (; i < rows; ++i) t += xa[i] * w[i] * yb[i];
      c[a + b * ldc] += t;
    }
  }
}

void pairwise_distance(std::size_t na, const double* ax, const double* ay, std::size_t nb,
                       const double* bx, const double* by, double* out, std::size_t ldo) {
  for (std::size_t j = 0; j < nb; ++j) {
    const __m256d vbx = _mm256_set1_pd(bx[j]);
    const __m256d vby = _mm256_set1_pd(by[j]);
    double* col = out + j * ldo;
    std::size_t i = 0;
    for (; i + 4 <= na; i += 4) {
      const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(ax + i), vbx);
      const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ay + i), vby);
      // dx*dx + dy*dy without FMA contraction so the result is bitwise equal to the scalar path
      const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
      _mm256_storeu_pd(col + i, _mm256_sqrt_pd(d2));
    }
    for (; i < na; ++i) {
      const double dx = ax[i] - bx[j];
      const double dy = ay[i] - by[j];
      col[i] = std::sqrt(dx * dx + dy * dy);
    }
  }
}

#else  // no AVX2 at compile time: keep the symbols, forward to the reference path

double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { scalar::axpy(alpha, x, y, n); }
void weighted_gram(std::size_t rows, std::size_t p, std::size_t q, const double* x, std::size_t ldx,
                   const double* w, const double* y, std::size_t ldy, double* c, std::size_t ldc) {
  scalar::weighted_gram(rows, p, q, x, ldx, w, y, ldy, c, ldc);
}
void pairwise_distance(std::size_t na, const double* ax, const double* ay, std::size_t nb,
                       const double* bx, const double* by, double* out, std::size_t ldo) {
  scalar::pairwise_distance(na, ax, ay, nb, bx, by, out, ldo);
}

#endif

}  // namespace mrflp::kernels::avx2

#include "mrflp/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

namespace k = mrflp::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  return v;
}

bool have_avx2() { return k::detect_isa() == k::Isa::Avx2; }

}  // namespace

TEST(Kernels, DotMatchesScalarAcrossLengths) {
  if (!have_avx2()) GTEST_SKIP() << "no AVX2";
  std::mt19937_64 rng(1);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1001u}) {
    const auto a = random_vec(n, rng), b = random_vec(n, rng);
    const double s = k::scalar::dot(a.data(), b.data(), n);
    const double v = k::avx2::dot(a.data(), b.data(), n);
    EXPECT_NEAR(s, v, 1e-12 * (1.0 + std::abs(s))) << n;
  }
}

TEST(Kernels, AxpyMatchesScalar) {
  if (!have_avx2()) GTEST_SKIP() << "no AVX2";
  std::mt19937_64 rng(2);
  for (std::size_t n : {1u, 5u, 8u, 131u}) {
    const auto x = random_vec(n, rng);
    auto y1 = random_vec(n, rng);
    auto y2 = y1;
    k::scalar::axpy(0.7, x.data(), y1.data(), n);
    k::avx2::axpy(0.7, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-14);
  }
}

TEST(Kernels, WeightedGramMatchesScalarWithLeadingDimensions) {
  if (!have_avx2()) GTEST_SKIP() << "no AVX2";
  std::mt19937_64 rng(3);
  const std::size_t rows = 37, p = 5, q = 6, ldx = 40, ldy = 41, ldc = 7;
  const auto x = random_vec(ldx * p, rng), y = random_vec(ldy * q, rng), w = random_vec(rows, rng);
  auto c1 = random_vec(ldc * q, rng);
  auto c2 = c1;
  k::scalar::weighted_gram(rows, p, q, x.data(), ldx, w.data(), y.data(), ldy, c1.data(), ldc);
  k::avx2::weighted_gram(rows, p, q, x.data(), ldx, w.data(), y.data(), ldy, c2.data(), ldc);
  for (std::size_t i = 0; i < c1.size(); ++i) EXPECT_NEAR(c1[i], c2[i], 1e-12);
}

TEST(Kernels, WeightedGramAgainstLoop) {
  std::mt19937_64 rng(4);
  const std::size_t rows = 9, p = 3, q = 2;
  const auto x = random_vec(rows * p, rng), y = random_vec(rows * q, rng), w = random_vec(rows, rng);
  std::vector<double> c(p * q, 0.0);
  k::weighted_gram(rows, p, q, x.data(), rows, w.data(), y.data(), rows, c.data(), p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      double s = 0;
      for (std::size_t r = 0; r < rows; ++r) s += x[i * rows + r] * w[r] * y[j * rows + r];
      EXPECT_NEAR(c[j * p + i], s, 1e-12);
    }
}

TEST(Kernels, PairwiseDistanceBitwiseEqual) {
  if (!have_avx2()) GTEST_SKIP() << "no AVX2";
  std::mt19937_64 rng(5);
  const std::size_t na = 13, nb = 11;
  const auto ax = random_vec(na, rng), ay = random_vec(na, rng), bx = random_vec(nb, rng), by = random_vec(nb, rng);
  std::vector<double> d1(na * nb), d2(na * nb);
  k::scalar::pairwise_distance(na, ax.data(), ay.data(), nb, bx.data(), by.data(), d1.data(), na);
  k::avx2::pairwise_distance(na, ax.data(), ay.data(), nb, bx.data(), by.data(), d2.data(), na);
  EXPECT_EQ(d1, d2);
  EXPECT_DOUBLE_EQ(d1[0], std::hypot(ax[0] - bx[0], ay[0] - by[0]));
}

TEST(Kernels, DispatchCanBeForced) {
  const k::Isa before = k::active_isa();
  EXPECT_EQ(k::set_isa(k::Isa::Scalar), k::Isa::Scalar);
  EXPECT_EQ(k::active_isa(), k::Isa::Scalar);
  const double a[3] = {1, 2, 3};
  EXPECT_DOUBLE_EQ(k::dot(a, a, 3), 14.0);
  k::set_isa(before);
  EXPECT_EQ(k::isa_name(k::Isa::Scalar), "scalar");
}

// Equivalence tests between the scalar reference kernels and the AVX2
// variants: on machines without AVX2 the SIMD half is skipped.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "kpg/kernels.hpp"
#include "kpg/rng.hpp"

using kpg::Rng;
using kpg::kern::Kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

double rel_err(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / denom;
}

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, rel_err(a[i], b[i]));
  }
  return worst;
}

// Sizes straddle the SIMD width boundaries on purpose.
const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 13, 16, 31, 64, 257};

}  // namespace

TEST_CASE("scalar kernels: basic identities") {
  const Kernels& k = kpg::kern::scalar_kernels();
  std::vector<double> a = {1.0, 2.0, 3.0};
  std::vector<double> b = {4.0, -5.0, 6.0};
  CHECK(k.dot(a.data(), b.data(), 3) == doctest::Approx(12.0));

  std::vector<double> y = {1.0, 1.0, 1.0};
  k.axpy(3, 2.0, a.data(), y.data());
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 5.0);
  CHECK(y[2] == 7.0);

  k.scal(3, 0.5, y.data());
  CHECK(y[0] == 1.5);

  // y = W x + b for a 2x3 matrix.
  std::vector<double> w = {1, 0, 0, 0, 1, 0};
  std::vector<double> x = {9, 8, 7};
  std::vector<double> bias = {0.5, -0.5};
  std::vector<double> out(2);
  k.matvec(2, 3, w.data(), x.data(), bias.data(), out.data());
  CHECK(out[0] == 9.5);
  CHECK(out[1] == 7.5);

  k.matvec(2, 3, w.data(), x.data(), nullptr, out.data());
  CHECK(out[0] == 9.0);
  CHECK(out[1] == 8.0);
}

TEST_CASE("active table reports a known variant") {
  const Kernels& k = kpg::kern::active();
  const std::string name = k.name;
  CHECK((name == "scalar" || name == "avx2"));
}

TEST_CASE("avx2 kernels match scalar within tight tolerance") {
  const Kernels* avx2 = kpg::kern::avx2_kernels();
  if (!avx2) return;  // machine without AVX2: nothing to compare
  const Kernels& ref = kpg::kern::scalar_kernels();
  Rng rng(99);

  for (std::size_t n : kSizes) {
    CAPTURE(n);
    const auto a = random_vec(rng, n, 2.0);
    const auto b = random_vec(rng, n, 3.0);

    CHECK(rel_err(avx2->dot(a.data(), b.data(), n),
                  ref.dot(a.data(), b.data(), n)) < 1e-13);

    auto y1 = random_vec(rng, n);
    auto y2 = y1;
    ref.axpy(n, 1.7, a.data(), y1.data());
    avx2->axpy(n, 1.7, a.data(), y2.data());
    CHECK(max_rel_err(y1, y2) < 1e-13);

    auto s1 = a;
    auto s2 = a;
    ref.scal(n, -0.37, s1.data());
    avx2->scal(n, -0.37, s2.data());
    CHECK(max_rel_err(s1, s2) == 0.0);  // one multiply per lane, identical
  }
}

TEST_CASE("avx2 matvec family matches scalar") {
  const Kernels* avx2 = kpg::kern::avx2_kernels();
  if (!avx2) return;
  const Kernels& ref = kpg::kern::scalar_kernels();
  Rng rng(7);

  for (std::size_t rows : {1u, 2u, 5u, 8u, 17u}) {
    for (std::size_t cols : {1u, 3u, 4u, 9u, 33u}) {
      CAPTURE(rows);
      CAPTURE(cols);
      const auto w = random_vec(rng, rows * cols);
      const auto x = random_vec(rng, cols);
      const auto bias = random_vec(rng, rows);
      std::vector<double> y1(rows), y2(rows);
      ref.matvec(rows, cols, w.data(), x.data(), bias.data(), y1.data());
      avx2->matvec(rows, cols, w.data(), x.data(), bias.data(), y2.data());
      CHECK(max_rel_err(y1, y2) < 1e-12);

      const auto g = random_vec(rng, rows);
      auto acc1 = random_vec(rng, cols);
      auto acc2 = acc1;
      ref.matvec_t_acc(rows, cols, w.data(), g.data(), acc1.data());
      avx2->matvec_t_acc(rows, cols, w.data(), g.data(), acc2.data());
      CHECK(max_rel_err(acc1, acc2) < 1e-12);

      auto w1 = w;
      auto w2 = w;
      ref.rank1_acc(rows, cols, w1.data(), g.data(), x.data());
      avx2->rank1_acc(rows, cols, w2.data(), g.data(), x.data());
      CHECK(max_rel_err(w1, w2) < 1e-12);
    }
  }
}

TEST_CASE("avx2 adam matches scalar") {
  const Kernels* avx2 = kpg::kern::avx2_kernels();
  if (!avx2) return;
  const Kernels& ref = kpg::kern::scalar_kernels();
  Rng rng(21);

  for (std::size_t n : kSizes) {
    CAPTURE(n);
    auto p1 = random_vec(rng, n);
    auto m1 = random_vec(rng, n, 0.1);
    auto v1 = random_vec(rng, n, 0.1);
    for (double& x : v1) x = std::abs(x);  // second moments are nonnegative
    const auto g = random_vec(rng, n);
    auto p2 = p1;
    auto m2 = m1;
    auto v2 = v1;

    const double bc1 = 1.0 / (1.0 - std::pow(0.9, 3.0));
    const double bc2 = 1.0 / (1.0 - std::pow(0.999, 3.0));
    ref.adam(n, p1.data(), m1.data(), v1.data(), g.data(), 1e-3, 0.9, 0.999,
             1e-8, bc1, bc2);
    avx2->adam(n, p2.data(), m2.data(), v2.data(), g.data(), 1e-3, 0.9, 0.999,
               1e-8, bc1, bc2);
    CHECK(max_rel_err(p1, p2) < 1e-13);
    CHECK(max_rel_err(m1, m2) < 1e-13);
    CHECK(max_rel_err(v1, v2) < 1e-13);
  }
}

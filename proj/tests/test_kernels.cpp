#include <cmath>
#include <vector>

#include "doctest.h"
#include "tega/kernels.hpp"
#include "tega/rng.hpp"

using namespace tega;

namespace {

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (float& x : v) x = float(rng.uniform(-2.0, 2.0));
  return v;
}

}  // namespace

TEST_CASE("scalar kernels match straightforward loops") {
  const auto a = random_vec(301, 1);
  const auto b = random_vec(301, 2);
  const auto& k = kernels::scalar_backend();

  double dot = 0.0, l2 = 0.0, sum = 0.0;
  float mx = a[0];
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    l2 += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
    sum += a[i];
    mx = std::max(mx, a[i]);
  }
  CHECK(k.dot(a.data(), b.data(), a.size()) ==
        doctest::Approx(dot).epsilon(1e-4));
  CHECK(k.l2sq(a.data(), b.data(), a.size()) ==
        doctest::Approx(l2).epsilon(1e-4));
  CHECK(k.sum(a.data(), a.size()) == doctest::Approx(sum).epsilon(1e-4));
  CHECK(k.max(a.data(), a.size()) == mx);
}

TEST_CASE("active backend agrees with the scalar reference") {
  const auto& s = kernels::scalar_backend();
  const auto& v = kernels::active_backend();
  INFO("active backend: ", v.name);
  for (std::size_t n : {1u, 7u, 8u, 33u, 257u}) {
    const auto a = random_vec(n, 10 + n);
    const auto b = random_vec(n, 20 + n);
    CHECK(v.dot(a.data(), b.data(), n) ==
          doctest::Approx(s.dot(a.data(), b.data(), n)).epsilon(1e-4));
    CHECK(v.l2sq(a.data(), b.data(), n) ==
          doctest::Approx(s.l2sq(a.data(), b.data(), n)).epsilon(1e-4));
    CHECK(v.sum(a.data(), n) ==
          doctest::Approx(s.sum(a.data(), n)).epsilon(1e-4));
    CHECK(v.max(a.data(), n) == s.max(a.data(), n));

    auto y1 = b, y2 = b;
    s.axpy(0.37f, a.data(), y1.data(), n);
    v.axpy(0.37f, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-5));
    }
  }
}

TEST_CASE("nearest_point: both backends find the true nearest neighbor") {
  const auto& s = kernels::scalar_backend();
  const auto& v = kernels::active_backend();
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + trial * 13;
    const auto pts = random_vec(n * 3, 100 + trial);
    const auto q = random_vec(3, 200 + trial);
    float ds = 0, dv = 0;
    const std::size_t is = s.nearest_point(q.data(), pts.data(), n, &ds);
    const std::size_t iv = v.nearest_point(q.data(), pts.data(), n, &dv);
    CHECK(is == iv);
    CHECK(ds == doctest::Approx(dv).epsilon(1e-5));
    // brute force
    double best = 1e300;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0;
      for (int c = 0; c < 3; ++c) {
        const double d = double(q[c]) - pts[3 * i + c];
        d2 += d * d;
      }
      if (d2 < best) {
        best = d2;
        best_i = i;
      }
    }
    CHECK(is == best_i);
  }
}

TEST_CASE("matmul_acc: backends agree with a triple loop") {
  const std::size_t m = 9, k = 17, n = 13;
  const auto A = random_vec(m * k, 7);
  const auto B = random_vec(k * n, 8);
  std::vector<float> Cs(m * n, 0.5f), Cv(m * n, 0.5f), Cr(m * n, 0.5f);
  kernels::scalar_backend().matmul_acc(A.data(), B.data(), Cs.data(), m, k, n);
  kernels::active_backend().matmul_acc(A.data(), B.data(), Cv.data(), m, k, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = Cr[i * n + j];
      for (std::size_t p = 0; p < k; ++p) acc += double(A[i * k + p]) * B[p * n + j];
      Cr[i * n + j] = float(acc);
    }
  }
  for (std::size_t i = 0; i < m * n; ++i) {
    CHECK(Cs[i] == doctest::Approx(Cr[i]).epsilon(1e-4));
    CHECK(Cv[i] == doctest::Approx(Cr[i]).epsilon(1e-4));
  }
}

TEST_CASE("force_backend selects the named implementation") {
  kernels::force_backend("scalar");
  CHECK(std::string(kernels::active_backend().name) == "scalar");
  kernels::force_backend("auto");
}

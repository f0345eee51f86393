#include <cstddef>
#include <limits>

#include "tega/kernels.hpp"

namespace tega::kernels {
namespace {

float dot_scalar(const float* a, const float* b, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

float l2sq_scalar(const float* a, const float* b, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    float d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void axpy_scalar(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(float alpha, float* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

float sum_scalar(const float* x, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

float max_scalar(const float* x, std::size_t n) {
  float m = -std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

std::size_t nearest_point_scalar(const float* q, const float* pts,
                                 std::size_t n, float* out_d2) {
  std::size_t best = 0;
  float best_d2 = std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const float* p = pts + 3 * i;
    float dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
    float d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  if (out_d2) *out_d2 = best_d2;
  return best;
}

void matmul_acc_scalar(const float* a, const float* b, float* c, std::size_t m,
                       std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      float av = arow[p];
      if (av == 0.0f) continue;
      const float* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

const Backend& scalar_backend() {
  static const Backend backend = {
      dot_scalar, l2sq_scalar,          axpy_scalar,       scale_scalar,
      sum_scalar, max_scalar,           nearest_point_scalar,
      matmul_acc_scalar, "scalar",
  };
  return backend;
}

}  // namespace tega::kernels

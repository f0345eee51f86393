#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Data-parallel inner loops used by the geometry, generation, and trainer
// modules. Every kernel has a scalar reference implementation and, on x86-64
// with AVX2/FMA, a vectorized variant selected once at startup. The active
// backend is process-global and fixed for the lifetime of the run, so results
// are reproducible within a run regardless of call site.

namespace tega::kernels {

struct Backend {
  float (*dot)(const float* a, const float* b, std::size_t n);
  float (*l2sq)(const float* a, const float* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
  void (*scale)(float alpha, float* x, std::size_t n);
  float (*sum)(const float* x, std::size_t n);
  float (*max)(const float* x, std::size_t n);
  // Index of the point in `pts` (n points, xyz interleaved) nearest to `q`;
  // ties resolved toward the lower index. `out_d2` receives the squared
  // distance. n must be >= 1.
  std::size_t (*nearest_point)(const float* q, const float* pts, std::size_t n,
                               float* out_d2);
  // C (m x n, row major) += A (m x k, row major) * B (k x n, row major)
  void (*matmul_acc)(const float* a, const float* b, float* c, std::size_t m,
                     std::size_t k, std::size_t n);
  const char* name;
};

const Backend& scalar_backend();
// Scalar or AVX2, detected once at first use.
const Backend& active_backend();
// Overrides detection (tests and the TEGA_KERNELS=scalar escape hatch).
void force_backend(std::string_view name);

inline float dot(const float* a, const float* b, std::size_t n) {
  return active_backend().dot(a, b, n);
}
inline float l2sq(const float* a, const float* b, std::size_t n) {
  return active_backend().l2sq(a, b, n);
}
inline void axpy(float alpha, const float* x, float* y, std::size_t n) {
  active_backend().axpy(alpha, x, y, n);
}
inline void scale(float alpha, float* x, std::size_t n) {
  active_backend().scale(alpha, x, n);
}
inline float sum(const float* x, std::size_t n) {
  return active_backend().sum(x, n);
}
inline float max(const float* x, std::size_t n) {
  return active_backend().max(x, n);
}
inline std::size_t nearest_point(const float* q, const float* pts,
                                 std::size_t n, float* out_d2) {
  return active_backend().nearest_point(q, pts, n, out_d2);
}
inline void matmul_acc(const float* a, const float* b, float* c, std::size_t m,
                       std::size_t k, std::size_t n) {
  active_backend().matmul_acc(a, b, c, m, k, n);
}

}  // namespace tega::kernels

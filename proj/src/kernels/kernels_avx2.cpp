#include "tega/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define TEGA_HAVE_AVX2_TU 1
#include <immintrin.h>
#else
#define TEGA_HAVE_AVX2_TU 0
#endif

#include <cstddef>
#include <limits>

namespace tega::kernels {

#if TEGA_HAVE_AVX2_TU
namespace {

inline float hsum256(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_movehdup_ps(lo));
  return _mm_cvtss_f32(lo);
}

float dot_avx2(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
  float tail = 0.0f;
  for (; i < n; ++i) tail += a[i] * b[i];
  return hsum256(acc) + tail;
}

float l2sq_avx2(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    acc = _mm256_fmadd_ps(d, d, acc);
  }
  float tail = 0.0f;
  for (; i < n; ++i) {
    float d = a[i] - b[i];
    tail += d * d;
  }
  return hsum256(acc) + tail;
}

void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
  __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i),
                                            _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(float alpha, float* x, std::size_t n) {
  __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

float sum_avx2(const float* x, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float tail = 0.0f;
  for (; i < n; ++i) tail += x[i];
  return hsum256(acc) + tail;
}

float max_avx2(const float* x, std::size_t n) {
  float m = -std::numeric_limits<float>::infinity();
  std::size_t i = 0;
  if (n >= 8) {
    __m256 acc = _mm256_loadu_ps(x);
    for (i = 8; i + 8 <= n; i += 8)
      acc = _mm256_max_ps(acc, _mm256_loadu_ps(x + i));
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, acc);
    for (float v : lanes)
      if (v > m) m = v;
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

// Squared distances are evaluated 8 points at a time against deinterleaved
// lane registers; the winning lane index keeps the lowest-index tie.
std::size_t nearest_point_avx2(const float* q, const float* pts, std::size_t n,
                               float* out_d2) {
  std::size_t best = 0;
  float best_d2 = std::numeric_limits<float>::infinity();
  __m256 qx = _mm256_set1_ps(q[0]);
  __m256 qy = _mm256_set1_ps(q[1]);
  __m256 qz = _mm256_set1_ps(q[2]);
  std::size_t i = 0;
  alignas(32) float d2s[8];
  for (; i + 8 <= n; i += 8) {
    const float* p = pts + 3 * i;
    __m256 px = _mm256_setr_ps(p[0], p[3], p[6], p[9], p[12], p[15], p[18], p[21]);
    __m256 py = _mm256_setr_ps(p[1], p[4], p[7], p[10], p[13], p[16], p[19], p[22]);
    __m256 pz = _mm256_setr_ps(p[2], p[5], p[8], p[11], p[14], p[17], p[20], p[23]);
    __m256 dx = _mm256_sub_ps(px, qx);
    __m256 dy = _mm256_sub_ps(py, qy);
    __m256 dz = _mm256_sub_ps(pz, qz);
    __m256 d2 = _mm256_fmadd_ps(dx, dx, _mm256_fmadd_ps(dy, dy, _mm256_mul_ps(dz, dz)));
    _mm256_store_ps(d2s, d2);
    for (int l = 0; l < 8; ++l) {
      if (d2s[l] < best_d2) {
        best_d2 = d2s[l];
        best = i + std::size_t(l);
      }
    }
  }
  for (; i < n; ++i) {
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

void matmul_acc_avx2(const float* a, const float* b, float* c, std::size_t m,
                     std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      float av = arow[p];
      if (av == 0.0f) continue;
      const float* brow = b + p * n;
      __m256 va = _mm256_set1_ps(av);
      std::size_t j = 0;
      for (; j + 8 <= n; j += 8)
        _mm256_storeu_ps(crow + j, _mm256_fmadd_ps(va, _mm256_loadu_ps(brow + j),
                                                   _mm256_loadu_ps(crow + j)));
      for (; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

const Backend avx2_backend_impl = {
    dot_avx2,  l2sq_avx2, axpy_avx2,          scale_avx2,
    sum_avx2,  max_avx2,  nearest_point_avx2, matmul_acc_avx2,
    "avx2",
};

}  // namespace

const Backend* avx2_backend_if_supported() {
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return &avx2_backend_impl;
  return nullptr;
}

#else

const Backend* avx2_backend_if_supported() { return nullptr; }

#endif  // TEGA_HAVE_AVX2_TU

}  // namespace tega::kernels

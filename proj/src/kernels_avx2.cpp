// AVX2+FMA kernel variant. This translation unit is the only one compiled with
// -mavx2 -mfma; it must not be entered unless avx2_supported() returned true.
#include "ylab/kernels.hpp"

#include <immintrin.h>

namespace ylab::kern {
namespace {

double hadd(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double v_sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hadd(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double v_dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hadd(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double v_dot3(const double* x, const double* y, const double* z, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xy = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_fmadd_pd(xy, _mm256_loadu_pd(z + i), acc);
  }
  double s = hadd(acc);
  for (; i < n; ++i) s += x[i] * y[i] * z[i];
  return s;
}

void v_axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void v_scal(double a, double* x, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void v_vmul(const double* x, const double* y, double* r, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(r + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) r[i] = x[i] * y[i];
}

void v_powi(const double* x, double* r, std::size_t n, int k) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d base = _mm256_loadu_pd(x + i);
    __m256d acc = _mm256_set1_pd(1.0);
    int e = k;
    while (e > 0) {
      if (e & 1) acc = _mm256_mul_pd(acc, base);
      base = _mm256_mul_pd(base, base);
      e >>= 1;
    }
    _mm256_storeu_pd(r + i, acc);
  }
  for (; i < n; ++i) {
    double base = x[i], acc = 1.0;
    int e = k;
    while (e > 0) {
      if (e & 1) acc *= base;
      base *= base;
      e >>= 1;
    }
    r[i] = acc;
  }
}

}  // namespace

const Ops avx2_ops = {"avx2", v_sum, v_dot, v_dot3, v_axpy, v_scal, v_vmul, v_powi};

}  // namespace ylab::kern

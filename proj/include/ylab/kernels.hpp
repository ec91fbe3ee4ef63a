// Elementwise/reduction kernels with scalar reference implementations and an
// AVX2+FMA variant selected once at startup (cpuid, YLAB_SIMD override).
// Reductions are blocked pairwise: fixed block size, block partials combined
// in index order, so results are independent of thread count.
#pragma once

#include <cstddef>
#include <string>

namespace ylab::kern {

inline constexpr std::size_t kBlock = 4096;

struct Ops {
  const char* name;
  // Block-level primitives; callers pass n <= kBlock for reductions.
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*dot3)(const double* x, const double* y, const double* z, std::size_t n);
  void (*axpy)(double a, const double* x, double* y, std::size_t n);  // y += a x
  void (*scal)(double a, double* x, std::size_t n);
  void (*vmul)(const double* x, const double* y, double* r, std::size_t n);
  void (*powi)(const double* x, double* r, std::size_t n, int k);  // r = x^k, k >= 1
};

extern const Ops scalar_ops;
extern const Ops avx2_ops;

bool avx2_supported();
const Ops& ops();                 // selected variant
const std::string& active_name();  // "scalar" or "avx2"

// Deterministic full-length reductions (pairwise over kBlock partials).
double det_sum(const double* x, std::size_t n);
double det_dot(const double* x, const double* y, std::size_t n);
double det_dot3(const double* x, const double* y, const double* z, std::size_t n);

}  // namespace ylab::kern

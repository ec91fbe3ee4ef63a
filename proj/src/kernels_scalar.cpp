#include "ylab/kernels.hpp"

namespace ylab::kern {
namespace {

double s_sum(const double* x, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double s_dot(const double* x, const double* y, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double s_dot3(const double* x, const double* y, const double* z, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i] * z[i];
  return s;
}

void s_axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_scal(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void s_vmul(const double* x, const double* y, double* r, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) r[i] = x[i] * y[i];
}

void s_powi(const double* x, double* r, std::size_t n, int k) {
  for (std::size_t i = 0; i < n; ++i) {
    // Square-and-multiply keeps the operation count and rounding pattern
    // identical to the AVX2 variant lane-for-lane.
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

const Ops scalar_ops = {"scalar", s_sum, s_dot, s_dot3, s_axpy, s_scal, s_vmul, s_powi};

}  // namespace ylab::kern

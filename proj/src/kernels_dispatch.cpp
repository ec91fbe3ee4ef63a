#include "ylab/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <vector>

namespace ylab::kern {

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const Ops* select() {
  const char* e = std::getenv("YLAB_SIMD");
  if (e && std::strcmp(e, "scalar") == 0) return &scalar_ops;
  if (e && std::strcmp(e, "avx2") == 0) return avx2_supported() ? &avx2_ops : &scalar_ops;
  return avx2_supported() ? &avx2_ops : &scalar_ops;
}

}  // namespace

const Ops& ops() {
  static const Ops* sel = select();
  return *sel;
}

const std::string& active_name() {
  static const std::string name = ops().name;
  return name;
}

namespace {

// Pairwise combine of block partials, independent of how blocks were computed.
double pairwise(const double* p, std::size_t m) {
  if (m == 1) return p[0];
  if (m == 2) return p[0] + p[1];
  const std::size_t half = m / 2;
  return pairwise(p, half) + pairwise(p + half, m - half);
}

template <class BlockFn>
double blocked_reduce(std::size_t n, BlockFn&& fn) {
  if (n == 0) return 0.0;
  const std::size_t nb = (n + kBlock - 1) / kBlock;
  if (nb == 1) return fn(0, n);
  std::vector<double> partial(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = b * kBlock;
    partial[b] = fn(lo, std::min(kBlock, n - lo));
  }
  return pairwise(partial.data(), nb);
}

}  // namespace

double det_sum(const double* x, std::size_t n) {
  const Ops& o = ops();
  return blocked_reduce(n, [&](std::size_t lo, std::size_t len) { return o.sum(x + lo, len); });
}

double det_dot(const double* x, const double* y, std::size_t n) {
  const Ops& o = ops();
  return blocked_reduce(n,
                        [&](std::size_t lo, std::size_t len) { return o.dot(x + lo, y + lo, len); });
}

double det_dot3(const double* x, const double* y, const double* z, std::size_t n) {
  const Ops& o = ops();
  return blocked_reduce(
      n, [&](std::size_t lo, std::size_t len) { return o.dot3(x + lo, y + lo, z + lo, len); });
}

}  // namespace ylab::kern

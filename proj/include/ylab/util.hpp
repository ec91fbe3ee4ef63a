// Small shared utilities: errors, env, hashing, formatting, little-endian IO,
// dense linear solves, robust statistics.
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ylab {

using Vec = std::vector<double>;

// Exit-code-bearing error categories. main() maps these to process exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 2
};
struct SolverAbort : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 3
};
struct VerifyFailure : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 4
};
// Raised when an operation consumes bubble parameters the grid cannot resolve
// (lambda * local spacing too large) or that violate boundary clearance.
struct ResolutionGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thread count from YLAB_THREADS (default 1). Reductions are bit-stable for
// any value; this only caps worker counts for embarrassingly parallel loops.
int thread_count();

// FNV-1a 64-bit over bytes; used for config hashes in output headers.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

// Pinned float formatting for all text outputs (%.17g round-trips doubles and
// keeps reruns byte-identical).
std::string fmt_g17(double v);

// Little-endian binary IO. The checkpoint format is 64-bit LE throughout.
static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");
void put_u64(std::ostream& os, std::uint64_t v);
void put_i64(std::ostream& os, std::int64_t v);
void put_f64(std::ostream& os, double v);
void put_f64v(std::ostream& os, const Vec& v);
std::uint64_t get_u64(std::istream& is);
std::int64_t get_i64(std::istream& is);
double get_f64(std::istream& is);
Vec get_f64v(std::istream& is, std::size_t count);

// Cholesky solve of a small dense SPD system (row-major m x m). Returns false
// if a pivot degenerates. A is destroyed.
bool cholesky_solve(std::vector<double>& A, std::vector<double>& b, int m);

struct LineFit {
  double slope = 0, intercept = 0, rms_residual = 0;
};
// Least-squares affine fit y ~ intercept + slope * x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);  // by value: sorts a copy

// Legendre-Gauss nodes/weights on [-1, 1].
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights);

// Adaptive Gauss-Kronrod (7-15) on a finite interval to a relative tolerance.
double adaptive_quadrature(const std::function<double(double)>& f, double a, double b,
                           double rel_tol, int* evals = nullptr);

}  // namespace ylab

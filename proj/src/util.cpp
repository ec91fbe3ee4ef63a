#include "ylab/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <ostream>

namespace ylab {

int thread_count() {
  const char* e = std::getenv("YLAB_THREADS");
  if (!e || !*e) return 1;
  long v = std::strtol(e, nullptr, 10);
  if (v < 1) return 1;
  if (v > 256) return 256;
  return static_cast<int>(v);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
void put_i64(std::ostream& os, std::int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
void put_f64v(std::ostream& os, const Vec& v) {
  os.write(reinterpret_cast<const char*>(v.data()), 8 * static_cast<std::streamsize>(v.size()));
}
std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
std::int64_t get_i64(std::istream& is) {
  std::int64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
Vec get_f64v(std::istream& is, std::size_t count) {
  Vec v(count);
  is.read(reinterpret_cast<char*>(v.data()), 8 * static_cast<std::streamsize>(count));
  return v;
}

bool cholesky_solve(std::vector<double>& A, std::vector<double>& b, int m) {
  // In-place LL^T; forward/back substitution.
  for (int k = 0; k < m; ++k) {
    double d = A[k * m + k];
    for (int j = 0; j < k; ++j) d -= A[k * m + j] * A[k * m + j];
    if (!(d > 0)) return false;
    d = std::sqrt(d);
    A[k * m + k] = d;
    for (int i = k + 1; i < m; ++i) {
      double s = A[i * m + k];
      for (int j = 0; j < k; ++j) s -= A[i * m + j] * A[k * m + j];
      A[i * m + k] = s / d;
    }
  }
  for (int i = 0; i < m; ++i) {
    double s = b[i];
    for (int j = 0; j < i; ++j) s -= A[i * m + j] * b[j];
    b[i] = s / A[i * m + i];
  }
  for (int i = m - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < m; ++j) s -= A[j * m + i] * b[j];
    b[i] = s / A[i * m + i];
  }
  return true;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit out;
  const std::size_t m = x.size();
  if (m < 2 || y.size() != m) return out;
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) return out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double rr = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = y[i] - (out.intercept + out.slope * x[i]);
    rr += e * e;
  }
  out.rms_residual = std::sqrt(rr / static_cast<double>(m));
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return (m % 2) ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(m, 0.0);
  weights.assign(m, 0.0);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    // Newton iteration from the Chebyshev estimate.
    double x = std::cos(pi * (i + 0.75) / (m + 0.5));
    double pd = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pd = m * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / pd;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[m - 1 - i] = x;
    const double w = 2.0 / ((1 - x * x) * pd * pd);
    weights[i] = w;
    weights[m - 1 - i] = w;
  }
}

namespace {

// Gauss-Kronrod 7-15 abscissae/weights on [-1, 1].
const double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                        0.741531185599394, 0.586087235467691, 0.405845151377397,
                        0.207784955007898, 0.0};
const double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                        0.140653259715525, 0.169004726639267, 0.190350578064785,
                        0.204432940075298, 0.209482141084728};
const double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                       0.417959183673469};

struct GkResult {
  double integral, error;
};

GkResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), hh = 0.5 * (b - a);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(c - hh * kXgk[i]);
    fv[14 - i] = f(c + hh * kXgk[i]);
  }
  fv[7] = f(c);
  double resk = kWgk[7] * fv[7];
  double resg = kWg[3] * fv[7];
  for (int i = 0; i < 7; ++i) {
    resk += kWgk[i] * (fv[i] + fv[14 - i]);
    if (i % 2 == 1) resg += kWg[i / 2] * (fv[i] + fv[14 - i]);
  }
  return {resk * hh, std::abs(resk - resg) * hh};
}

}  // namespace

double adaptive_quadrature(const std::function<double(double)>& f, double a, double b,
                           double rel_tol, int* evals) {
  struct Seg {
    double a, b, integral, error;
  };
  std::vector<Seg> segs;
  GkResult r0 = gk15(f, a, b);
  segs.push_back({a, b, r0.integral, r0.error});
  int ev = 15;
  for (int round = 0; round < 4000; ++round) {
    double total = 0, err = 0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      total += segs[i].integral;
      err += segs[i].error;
      if (segs[i].error > segs[worst].error) worst = i;
    }
    const double scale = std::max(std::abs(total), 1e-300);
    if (err <= rel_tol * scale || segs.size() > 2000) {
      if (evals) *evals = ev;
      return total;
    }
    const Seg s = segs[worst];
    const double mid = 0.5 * (s.a + s.b);
    GkResult rl = gk15(f, s.a, mid), rr = gk15(f, mid, s.b);
    ev += 30;
    segs[worst] = {s.a, mid, rl.integral, rl.error};
    segs.push_back({mid, s.b, rr.integral, rr.error});
  }
  if (evals) *evals = ev;
  double total = 0;
  for (const auto& s : segs) total += s.integral;
  return total;
}

}  // namespace ylab

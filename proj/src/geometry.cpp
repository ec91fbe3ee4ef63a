// Domain and grid construction: graded radial meshes, masked Cartesian
// lattices with cut boundary links, product sphere quadrature, checkpoints.
#include "ylab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ylab/kernels.hpp"

namespace ylab {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

double sphere_area(int n, double radius) {
  // S_{n-1} = 2 pi^{n/2} / Gamma(n/2)
  const double s = 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
  return s * std::pow(radius, n - 1);
}

double unit_ball_volume(int n) { return sphere_area(n, 1.0) / n; }

// ---------------------------------------------------------------------------
// Domain

bool Domain::contains(const double* x) const { return boundary_distance(x) > 0.0; }

double Domain::boundary_distance(const double* x) const {
  switch (kind) {
    case DomainKind::ball: {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += x[i] * x[i];
      return radius - std::sqrt(s);
    }
    case DomainKind::annulus: {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += x[i] * x[i];
      const double rr = std::sqrt(s);
      return std::min(radius - rr, rr - inner);
    }
    case DomainKind::box: {
      double d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) d = std::min(d, std::min(x[i] - lo[i], hi[i] - x[i]));
      return d;
    }
  }
  return 0.0;
}

double Domain::inradius() const {
  switch (kind) {
    case DomainKind::ball: return radius;
    case DomainKind::annulus: return 0.5 * (radius - inner);
    case DomainKind::box: {
      double d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) d = std::min(d, hi[i] - lo[i]);
      return 0.5 * d;
    }
  }
  return 0.0;
}

double Domain::volume() const {
  switch (kind) {
    case DomainKind::ball: return sphere_area(n, 1.0) * std::pow(radius, n) / n;
    case DomainKind::annulus:
      return sphere_area(n, 1.0) * (std::pow(radius, n) - std::pow(inner, n)) / n;
    case DomainKind::box: {
      double v = 1.0;
      for (int i = 0; i < n; ++i) v *= hi[i] - lo[i];
      return v;
    }
  }
  return 0.0;
}

double Domain::surface_area() const {
  switch (kind) {
    case DomainKind::ball: return sphere_area(n, radius);
    case DomainKind::annulus: return sphere_area(n, radius) + sphere_area(n, inner);
    case DomainKind::box: {
      double a = 0.0;
      for (int i = 0; i < n; ++i) {
        double f = 2.0;
        for (int j = 0; j < n; ++j)
          if (j != i) f *= hi[j] - lo[j];
        a += f;
      }
      return a;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Sphere quadrature: recursive product rule on S^{d-1}. Gauss-Legendre in the
// polar angle against the sin^{d-2} weight, uniform midpoints on the base
// circle. Weights sum to the sphere measure up to quadrature error.

namespace {

void circle_points(int m, std::vector<double>& pts, std::vector<double>& wts) {
  pts.resize(2 * static_cast<std::size_t>(m));
  wts.resize(m);
  for (int k = 0; k < m; ++k) {
    const double th = 2.0 * kPi * (k + 0.5) / m;
    pts[2 * k] = std::cos(th);
    pts[2 * k + 1] = std::sin(th);
    wts[k] = 2.0 * kPi / m;
  }
}

void sphere_points(int d, int order, std::vector<double>& pts, std::vector<double>& wts) {
  if (d == 2) {
    circle_points(4 * order, pts, wts);
    return;
  }
  std::vector<double> gl_x, gl_w;
  gauss_legendre(order, gl_x, gl_w);
  std::vector<double> sub_p, sub_w;
  sphere_points(d - 1, std::max(8, order / 2), sub_p, sub_w);
  const std::size_t ns = sub_w.size();
  pts.assign(static_cast<std::size_t>(order) * ns * d, 0.0);
  wts.assign(static_cast<std::size_t>(order) * ns, 0.0);
  std::size_t q = 0;
  for (int j = 0; j < order; ++j) {
    const double th = 0.5 * kPi * (gl_x[j] + 1.0);
    const double st = std::sin(th), ct = std::cos(th);
    const double wj = gl_w[j] * 0.5 * kPi * std::pow(st, d - 2);
    for (std::size_t k = 0; k < ns; ++k, ++q) {
      double* p = &pts[q * d];
      p[0] = ct;
      for (int i = 0; i < d - 1; ++i) p[1 + i] = st * sub_p[k * (d - 1) + i];
      wts[q] = wj * sub_w[k];
    }
  }
}

void append_sphere(BoundaryQuad& bq, int n, int order, double radius, double nsign) {
  std::vector<double> p, w;
  sphere_points(n, order, p, w);
  const double rpow = std::pow(radius, n - 1);
  for (std::size_t k = 0; k < w.size(); ++k) {
    for (int i = 0; i < n; ++i) {
      bq.x.push_back(radius * p[k * n + i]);
      bq.nu.push_back(nsign * p[k * n + i]);
    }
    bq.w.push_back(w[k] * rpow);
  }
}

void append_box_faces(BoundaryQuad& bq, const Domain& dom, int order) {
  const int n = dom.n;
  const int fd = n - 1;
  int m = order;
  if (fd == 3) m = std::max(6, order / 2);
  if (fd >= 4) m = std::max(4, order / 4);
  for (int axis = 0; axis < n; ++axis) {
    for (int side = 0; side < 2; ++side) {
      // Uniform midpoint grid over the face orthogonal to `axis`.
      std::array<int, kMaxN> ax{};
      int c = 0;
      for (int j = 0; j < n; ++j)
        if (j != axis) ax[c++] = j;
      double cellw = 1.0;
      for (int j = 0; j < fd; ++j) cellw *= (dom.hi[ax[j]] - dom.lo[ax[j]]) / m;
      std::array<int, kMaxN> idx{};
      const std::int64_t total = [&] {
        std::int64_t t = 1;
        for (int j = 0; j < fd; ++j) t *= m;
        return t;
      }();
      for (std::int64_t flat = 0; flat < total; ++flat) {
        std::int64_t rem = flat;
        for (int j = 0; j < fd; ++j) {
          idx[j] = static_cast<int>(rem % m);
          rem /= m;
        }
        std::array<double, kMaxN> x{}, nu{};
        x[axis] = side ? dom.hi[axis] : dom.lo[axis];
        nu[axis] = side ? 1.0 : -1.0;
        for (int j = 0; j < fd; ++j) {
          const int a = ax[j];
          x[a] = dom.lo[a] + (idx[j] + 0.5) * (dom.hi[a] - dom.lo[a]) / m;
        }
        for (int i = 0; i < n; ++i) {
          bq.x.push_back(x[i]);
          bq.nu.push_back(nu[i]);
        }
        bq.w.push_back(cellw);
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid build

namespace {

void build_radial(const Domain& dom, const GridSpec& spec, Grid& g) {
  const std::int64_t N = spec.nr;
  if (N < 8) throw ConfigError("radial grid needs nr >= 8");
  const int n = dom.n;
  g.r.resize(N);
  if (dom.kind == DomainKind::ball) {
    for (std::int64_t i = 0; i < N; ++i)
      g.r[i] = dom.radius * std::pow(double(i) / double(N - 1), spec.gamma);
  } else {
    for (std::int64_t i = 0; i < N; ++i)
      g.r[i] = dom.inner + (dom.radius - dom.inner) * double(i) / double(N - 1);
  }
  g.gamma = dom.kind == DomainKind::ball ? spec.gamma : 1.0;

  // Lumped P1 masses against the r^{n-1} measure, cellwise closed form.
  const double S = sphere_area(n, 1.0);
  g.wq.assign(N, 0.0);
  for (std::int64_t i = 0; i + 1 < N; ++i) {
    const double ra = g.r[i], rb = g.r[i + 1], h = rb - ra;
    const double an = (std::pow(rb, n) - std::pow(ra, n)) / n;
    const double an1 = (std::pow(rb, n + 1) - std::pow(ra, n + 1)) / (n + 1);
    g.wq[i] += S * (rb * an - an1) / h;
    g.wq[i + 1] += S * (an1 - ra * an) / h;
  }
  g.interior.assign(N, 1);
  g.interior[N - 1] = 0;
  if (dom.kind == DomainKind::annulus) g.interior[0] = 0;

  append_sphere(g.bq, n, spec.surf_order, dom.radius, 1.0);
  if (dom.kind == DomainKind::annulus) append_sphere(g.bq, n, spec.surf_order, dom.inner, -1.0);
}

void build_cartesian(const Domain& dom, const GridSpec& spec, Grid& g) {
  const int n = dom.n;
  const double h = spec.h;
  if (h <= 0.0) throw ConfigError("cartesian grid needs h > 0");
  g.h = h;
  std::array<double, kMaxN> lo{}, hi{};
  if (dom.kind == DomainKind::box) {
    lo = dom.lo;
    hi = dom.hi;
  } else {
    for (int i = 0; i < n; ++i) {
      lo[i] = -dom.radius;
      hi[i] = dom.radius;
    }
  }
  std::int64_t nlat = 1;
  for (int i = 0; i < n; ++i) {
    g.origin[i] = lo[i];
    g.dims[i] = static_cast<std::int64_t>(std::ceil((hi[i] - lo[i]) / h - 1e-12));
    if (g.dims[i] < 2) throw ConfigError("cartesian grid too coarse for the domain");
    nlat *= g.dims[i];
    if (nlat > (std::int64_t(1) << 26)) throw ConfigError("cartesian lattice exceeds 2^26 cells");
  }

  // Mask lattice cells by their center.
  g.lattice.assign(nlat, -1);
  std::vector<std::int64_t> node_cell;
  std::array<std::int64_t, kMaxN> idx{};
  for (std::int64_t cell = 0; cell < nlat; ++cell) {
    std::int64_t rem = cell;
    std::array<double, kMaxN> x{};
    for (int i = 0; i < n; ++i) {
      idx[i] = rem % g.dims[i];
      rem /= g.dims[i];
      x[i] = g.origin[i] + (idx[i] + 0.5) * h;
    }
    if (dom.contains(x.data())) {
      g.lattice[cell] = static_cast<std::int64_t>(node_cell.size());
      node_cell.push_back(cell);
    }
  }
  const std::size_t nn = node_cell.size();
  if (nn == 0) throw ConfigError("cartesian grid has no interior cells");
  g.xy.resize(nn * n);
  for (std::size_t k = 0; k < nn; ++k) {
    std::int64_t rem = node_cell[k];
    for (int i = 0; i < n; ++i) {
      g.xy[k * n + i] = g.origin[i] + (rem % g.dims[i] + 0.5) * h;
      rem /= g.dims[i];
    }
  }

  // Neighbor links; cut links store the boundary intercept fraction.
  g.nbr.assign(nn * 2 * n, -1);
  g.theta.assign(nn * 2 * n, 1.0);
  std::array<std::int64_t, kMaxN> stride{};
  stride[0] = 1;
  for (int i = 1; i < n; ++i) stride[i] = stride[i - 1] * g.dims[i - 1];
  for (std::size_t k = 0; k < nn; ++k) {
    const std::int64_t cell = node_cell[k];
    std::int64_t rem = cell;
    for (int i = 0; i < n; ++i) {
      idx[i] = rem % g.dims[i];
      rem /= g.dims[i];
    }
    const double* c = &g.xy[k * n];
    for (int a = 0; a < n; ++a) {
      for (int s = 0; s < 2; ++s) {
        const int link = 2 * a + s;
        const double dir = s ? 1.0 : -1.0;
        const std::int64_t ja = idx[a] + (s ? 1 : -1);
        std::int64_t nbid = -1;
        if (ja >= 0 && ja < g.dims[a]) nbid = g.lattice[cell + (s ? stride[a] : -stride[a])];
        if (nbid >= 0) {
          g.nbr[k * 2 * n + link] = static_cast<std::int32_t>(nbid);
          continue;
        }
        // Bisect for the boundary crossing along the link.
        std::array<double, kMaxN> y{};
        double tlo = 0.0, thi_ = 1.0;
        for (int it = 0; it < 60; ++it) {
          const double t = 0.5 * (tlo + thi_);
          for (int i = 0; i < n; ++i) y[i] = c[i];
          y[a] += dir * t * h;
          (dom.boundary_distance(y.data()) > 0.0 ? tlo : thi_) = t;
        }
        // Clamp: tiny intercepts make the cut coefficient blow up.
        g.theta[k * 2 * n + link] = std::clamp(0.5 * (tlo + thi_), 0.05, 1.0);
      }
    }
  }

  // Volume weights: full cells get h^n, boundary cells a subsampled fraction.
  const int sub = n == 3 ? 4 : 3;
  const double cellvol = std::pow(h, n);
  const double safe = 0.5 * h * std::sqrt(double(n));
  std::int64_t nsub = 1;
  for (int i = 0; i < n; ++i) nsub *= sub;
  g.wq.assign(nn, 0.0);
  for (std::size_t k = 0; k < nn; ++k) {
    const double* c = &g.xy[k * n];
    if (dom.boundary_distance(c) >= safe) {
      g.wq[k] = cellvol;
      continue;
    }
    std::int64_t cnt = 0;
    std::array<double, kMaxN> y{};
    for (std::int64_t q = 0; q < nsub; ++q) {
      std::int64_t rem = q;
      for (int i = 0; i < n; ++i) {
        y[i] = c[i] + ((rem % sub + 0.5) / sub - 0.5) * h;
        rem /= sub;
      }
      if (dom.contains(y.data())) ++cnt;
    }
    g.wq[k] = cellvol * double(cnt) / double(nsub);
  }
  g.interior.assign(nn, 1);

  if (dom.kind == DomainKind::box) {
    append_box_faces(g.bq, dom, spec.surf_order);
  } else {
    append_sphere(g.bq, n, spec.surf_order, dom.radius, 1.0);
    if (dom.kind == DomainKind::annulus)
      append_sphere(g.bq, n, spec.surf_order, dom.inner, -1.0);
  }
}

}  // namespace

Grid build_grid(const Domain& dom, const GridSpec& spec) {
  if (dom.n < 3 || dom.n > kMaxN) throw ConfigError("dimension must be 3, 4, or 5");
  if (dom.kind == DomainKind::annulus && !(dom.inner > 0.0 && dom.inner < dom.radius))
    throw ConfigError("annulus needs 0 < inner < radius");
  if (dom.kind == DomainKind::box)
    for (int i = 0; i < dom.n; ++i)
      if (!(dom.hi[i] > dom.lo[i])) throw ConfigError("box needs lo < hi on every axis");
  Grid g;
  g.dom = dom;
  g.n = dom.n;
  g.mode = spec.mode;
  if (spec.mode == GridMode::radial) {
    if (dom.kind == DomainKind::box) throw ConfigError("box domains need a cartesian grid");
    build_radial(dom, spec, g);
  } else {
    build_cartesian(dom, spec, g);
  }
  return g;
}

std::int64_t Grid::lattice_id(const std::int64_t* idx) const {
  std::int64_t cell = 0, s = 1;
  for (int i = 0; i < n; ++i) {
    if (idx[i] < 0 || idx[i] >= dims[i]) return -1;
    cell += idx[i] * s;
    s *= dims[i];
  }
  return lattice[cell];
}

double Grid::local_spacing(const double* a) const {
  if (mode == GridMode::cartesian) return h;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * a[i];
  const double rho = std::sqrt(s);
  const auto it = std::upper_bound(r.begin(), r.end(), rho);
  std::size_t i = it == r.begin() ? 0 : static_cast<std::size_t>(it - r.begin()) - 1;
  i = std::min(i, r.size() - 2);
  return r[i + 1] - r[i];
}

// ---------------------------------------------------------------------------
// Quadrature

double integrate(const Grid& g, const Vec& f) {
  if (f.size() != g.wq.size()) throw SolverAbort("integrate: field size mismatch");
  return kern::det_dot(g.wq.data(), f.data(), f.size());
}

Vec pow_field(const Vec& f, double q) {
  Vec out(f.size());
  const double qr = std::round(q);
  if (std::abs(q - qr) < 1e-12 && std::abs(qr) <= 64.0 && qr >= 0.0) {
    kern::ops().powi(f.data(), out.data(), f.size(), static_cast<int>(qr));
  } else {
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::pow(f[i], q);
  }
  return out;
}

double integrate_pow(const Grid& g, const Vec& f, double q) {
  if (f.size() != g.wq.size()) throw SolverAbort("integrate_pow: field size mismatch");
  if (q == 1.0) {
    Vec tmp(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = std::abs(f[i]);
    return kern::det_dot(g.wq.data(), tmp.data(), f.size());
  }
  if (q == 2.0) return kern::det_dot3(g.wq.data(), f.data(), f.data(), f.size());
  Vec tmp(f.size());
  const double qr = std::round(q);
  if (std::abs(q - qr) < 1e-12 && std::abs(qr) <= 64.0 && qr > 0.0) {
    for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = std::abs(f[i]);
    Vec tmp2(f.size());
    kern::ops().powi(tmp.data(), tmp2.data(), tmp.size(), static_cast<int>(qr));
    return kern::det_dot(g.wq.data(), tmp2.data(), tmp2.size());
  }
  for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = std::pow(std::abs(f[i]), q);
  return kern::det_dot(g.wq.data(), tmp.data(), tmp.size());
}

double surface_integrate(const Grid& g,
                         const std::function<double(const double*, const double*)>& f) {
  const std::size_t m = g.bq.size();
  Vec vals(m);
  for (std::size_t k = 0; k < m; ++k)
    vals[k] = g.bq.w[k] * f(&g.bq.x[k * g.n], &g.bq.nu[k * g.n]);
  return kern::det_sum(vals.data(), m);
}

// ---------------------------------------------------------------------------
// Interpolation

namespace {

double interp_radial(const Grid& g, const Vec& f, double rho) {
  const auto& r = g.r;
  const std::size_t N = r.size();
  if (rho > r.back()) {
    if (rho > r.back() * (1.0 + 1e-10) + 1e-300) return std::numeric_limits<double>::quiet_NaN();
    rho = r.back();
  }
  if (rho < r.front()) {
    if (rho < r.front() - 1e-10 * (r.back() - r.front()))
      return std::numeric_limits<double>::quiet_NaN();
    rho = r.front();
  }
  const auto it = std::upper_bound(r.begin(), r.end(), rho);
  std::size_t i = it == r.begin() ? 0 : static_cast<std::size_t>(it - r.begin()) - 1;
  i = std::min(i, N - 2);
  // Cubic Lagrange on four nodes around the cell, clamped at the ends.
  std::size_t j0 = i == 0 ? 0 : i - 1;
  j0 = std::min(j0, N - 4);
  double out = 0.0;
  for (int a = 0; a < 4; ++a) {
    double la = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (a == b) continue;
      la *= (rho - r[j0 + b]) / (r[j0 + a] - r[j0 + b]);
    }
    out += la * f[j0 + a];
  }
  return out;
}

double interp_cartesian(const Grid& g, const Vec& f, const double* x) {
  const int n = g.n;
  std::array<std::int64_t, kMaxN> base{};
  std::array<double, kMaxN> frac{};
  for (int i = 0; i < n; ++i) {
    const double u = (x[i] - g.origin[i]) / g.h - 0.5;
    const double fl = std::floor(u);
    base[i] = static_cast<std::int64_t>(fl);
    frac[i] = u - fl;
  }
  double out = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    std::array<std::int64_t, kMaxN> idx{};
    double wgt = 1.0;
    for (int i = 0; i < n; ++i) {
      const int bit = (corner >> i) & 1;
      idx[i] = base[i] + bit;
      wgt *= bit ? frac[i] : 1.0 - frac[i];
    }
    const std::int64_t id = g.lattice_id(idx.data());
    if (id < 0) {
      if (wgt > 1e-14) return std::numeric_limits<double>::quiet_NaN();
      continue;  // zero-weight corner may fall off the mask
    }
    out += wgt * f[id];
  }
  return out;
}

}  // namespace

double interp(const Grid& g, const Vec& f, const double* x) {
  if (g.mode == GridMode::cartesian) return interp_cartesian(g, f, x);
  double s = 0.0;
  for (int i = 0; i < g.n; ++i) s += x[i] * x[i];
  return interp_radial(g, f, std::sqrt(s));
}

Vec boundary_normal_derivative(const Grid& g, const Vec& f) {
  const std::size_t m = g.bq.size();
  const int n = g.n;
  Vec out(m, 0.0);
  std::array<double, kMaxN> y{};
  for (std::size_t k = 0; k < m; ++k) {
    const double* x = &g.bq.x[k * n];
    const double* nu = &g.bq.nu[k * n];
    const double f0 = g.mode == GridMode::radial ? interp(g, f, x) : 0.0;
    double d = std::numeric_limits<double>::quiet_NaN();
    double delta = g.local_spacing(x);
    // Cut-cell stencils can fall off the mask right at the boundary; back off
    // inward until both samples land on valid cells.
    for (int attempt = 0; attempt < 4 && !std::isfinite(d); ++attempt) {
      for (int i = 0; i < n; ++i) y[i] = x[i] - delta * nu[i];
      const double f1 = interp(g, f, y.data());
      for (int i = 0; i < n; ++i) y[i] = x[i] - 2.0 * delta * nu[i];
      const double f2 = interp(g, f, y.data());
      d = (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * delta);
      delta *= 1.5;
    }
    out[k] = d;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr char kGridMagic[8] = {'Y', 'L', 'A', 'B', 'G', 'R', 'D', '1'};

void put_sized(std::ostream& os, const Vec& v) {
  put_u64(os, v.size());
  put_f64v(os, v);
}

Vec get_sized(std::istream& is) {
  const std::uint64_t m = get_u64(is);
  if (m > (std::uint64_t(1) << 32)) throw ConfigError("corrupt checkpoint vector length");
  return get_f64v(is, m);
}

}  // namespace

void save_grid(const Grid& g, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open grid checkpoint for writing: " + path);
  os.write(kGridMagic, 8);
  put_u64(os, 1);  // version
  put_u64(os, static_cast<std::uint64_t>(g.dom.kind));
  put_u64(os, static_cast<std::uint64_t>(g.n));
  put_u64(os, static_cast<std::uint64_t>(g.mode));
  put_f64(os, g.dom.radius);
  put_f64(os, g.dom.inner);
  for (int i = 0; i < g.n; ++i) put_f64(os, g.dom.lo[i]);
  for (int i = 0; i < g.n; ++i) put_f64(os, g.dom.hi[i]);
  put_f64(os, g.gamma);
  put_f64(os, g.h);
  put_sized(os, g.r);
  for (int i = 0; i < g.n; ++i) put_i64(os, g.dims[i]);
  for (int i = 0; i < g.n; ++i) put_f64(os, g.origin[i]);
  put_u64(os, g.lattice.size());
  for (auto v : g.lattice) put_i64(os, v);
  put_sized(os, g.xy);
  put_u64(os, g.nbr.size());
  for (auto v : g.nbr) put_i64(os, v);
  put_sized(os, g.theta);
  put_sized(os, g.wq);
  put_u64(os, g.interior.size());
  os.write(reinterpret_cast<const char*>(g.interior.data()),
           static_cast<std::streamsize>(g.interior.size()));
  put_sized(os, g.bq.x);
  put_sized(os, g.bq.nu);
  put_sized(os, g.bq.w);
  if (!os) throw ConfigError("short write on grid checkpoint: " + path);
}

Grid load_grid(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open grid checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kGridMagic, 8) != 0)
    throw ConfigError("bad grid checkpoint magic: " + path);
  if (get_u64(is) != 1) throw ConfigError("unsupported grid checkpoint version: " + path);
  Grid g;
  g.dom.kind = static_cast<DomainKind>(get_u64(is));
  g.n = g.dom.n = static_cast<int>(get_u64(is));
  if (g.n < 3 || g.n > kMaxN) throw ConfigError("corrupt grid checkpoint: " + path);
  g.mode = static_cast<GridMode>(get_u64(is));
  g.dom.radius = get_f64(is);
  g.dom.inner = get_f64(is);
  for (int i = 0; i < g.n; ++i) g.dom.lo[i] = get_f64(is);
  for (int i = 0; i < g.n; ++i) g.dom.hi[i] = get_f64(is);
  g.gamma = get_f64(is);
  g.h = get_f64(is);
  g.r = get_sized(is);
  for (int i = 0; i < g.n; ++i) g.dims[i] = get_i64(is);
  for (int i = 0; i < g.n; ++i) g.origin[i] = get_f64(is);
  g.lattice.resize(get_u64(is));
  for (auto& v : g.lattice) v = get_i64(is);
  g.xy = get_sized(is);
  const std::uint64_t nnbr = get_u64(is);
  g.nbr.resize(nnbr);
  for (auto& v : g.nbr) v = static_cast<std::int32_t>(get_i64(is));
  g.theta = get_sized(is);
  g.wq = get_sized(is);
  g.interior.resize(get_u64(is));
  is.read(reinterpret_cast<char*>(g.interior.data()),
          static_cast<std::streamsize>(g.interior.size()));
  g.bq.x = get_sized(is);
  g.bq.nu = get_sized(is);
  g.bq.w = get_sized(is);
  if (!is) throw ConfigError("truncated grid checkpoint: " + path);
  return g;
}

}  // namespace ylab

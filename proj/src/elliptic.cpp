// Stiffness assembly and linear solves for the radial and cut-cell grids.
#include "ylab/elliptic.hpp"

#include <cmath>

#include "ylab/kernels.hpp"

namespace ylab {

Operators build_operators(const Grid& g) {
  Operators op;
  op.g = &g;
  if (g.mode == GridMode::radial) {
    const std::size_t N = g.r.size();
    const int n = g.n;
    const double S = sphere_area(n, 1.0);
    op.kd.assign(N, 0.0);
    op.kl.assign(N - 1, 0.0);
    for (std::size_t i = 0; i + 1 < N; ++i) {
      const double ra = g.r[i], rb = g.r[i + 1], h = rb - ra;
      // P1 gradients are constant per cell; the cell factor is the measure
      // S (rb^n - ra^n)/n over h^2.
      const double sc = S * (std::pow(rb, n) - std::pow(ra, n)) / n / (h * h);
      op.kd[i] += sc;
      op.kd[i + 1] += sc;
      op.kl[i] -= sc;
    }
    op.l1_extra.assign(N, 0.0);
    for (std::size_t i = 0; i < N; ++i)
      op.l1_extra[i] = g.r[i] > 0.0 ? (n - 1) * g.wq[i] / (g.r[i] * g.r[i]) : 0.0;
  } else {
    const std::size_t nn = g.size();
    const int n = g.n;
    op.link_coef = std::pow(g.h, n - 2);
    op.cdiag.assign(nn, 0.0);
    for (std::size_t k = 0; k < nn; ++k) {
      double d = 0.0;
      for (int l = 0; l < 2 * n; ++l) {
        if (g.nbr[k * 2 * n + l] >= 0)
          d += 1.0;
        else
          d += 1.0 / g.theta[k * 2 * n + l];
      }
      op.cdiag[k] = op.link_coef * d;
    }
  }
  return op;
}

void apply_K(const Operators& op, const Vec& u, Vec& out) {
  const Grid& g = *op.g;
  out.resize(u.size());
  if (g.mode == GridMode::radial) {
    const std::size_t N = u.size();
    out[0] = op.kd[0] * u[0] + op.kl[0] * u[1];
    for (std::size_t i = 1; i + 1 < N; ++i)
      out[i] = op.kl[i - 1] * u[i - 1] + op.kd[i] * u[i] + op.kl[i] * u[i + 1];
    out[N - 1] = op.kl[N - 2] * u[N - 2] + op.kd[N - 1] * u[N - 1];
  } else {
    const std::size_t nn = u.size();
    const int tn = 2 * g.n;
    for (std::size_t k = 0; k < nn; ++k) {
      double acc = op.cdiag[k] * u[k];
      for (int l = 0; l < tn; ++l) {
        const std::int32_t j = g.nbr[k * tn + l];
        if (j >= 0) acc -= op.link_coef * u[j];
      }
      out[k] = acc;
    }
  }
}

double energy(const Operators& op, const Vec& u) {
  Vec ku;
  apply_K(op, u, ku);
  return kern::det_dot(u.data(), ku.data(), u.size());
}

void thomas_solve(Vec d, Vec l, Vec& b) {
  const std::size_t N = d.size();
  Vec up = l;  // symmetric tridiagonal: upper = lower
  for (std::size_t i = 1; i < N; ++i) {
    const double m = l[i - 1] / d[i - 1];
    d[i] -= m * up[i - 1];
    b[i] -= m * b[i - 1];
  }
  b[N - 1] /= d[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) b[i] = (b[i] - up[i] * b[i + 1]) / d[i];
}

PcgResult pcg(const std::function<void(const Vec&, Vec&)>& apply, const Vec& diag, const Vec& b,
              Vec& x, double tol, int maxit) {
  const std::size_t N = b.size();
  Vec r(N), z(N), p(N), ap(N);
  apply(x, ap);
  for (std::size_t i = 0; i < N; ++i) r[i] = b[i] - ap[i];
  const double bnorm = std::sqrt(kern::det_dot(b.data(), b.data(), N));
  const double stop = tol * (bnorm > 0.0 ? bnorm : 1.0);
  for (std::size_t i = 0; i < N; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = kern::det_dot(r.data(), z.data(), N);
  PcgResult res;
  double rnorm = std::sqrt(kern::det_dot(r.data(), r.data(), N));
  for (int it = 0; it < maxit && rnorm > stop; ++it) {
    apply(p, ap);
    const double pap = kern::det_dot(p.data(), ap.data(), N);
    if (!(pap > 0.0)) throw SolverAbort("pcg: operator lost positive definiteness");
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < N; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    for (std::size_t i = 0; i < N; ++i) z[i] = r[i] / diag[i];
    const double rz2 = kern::det_dot(r.data(), z.data(), N);
    const double beta = rz2 / rz;
    rz = rz2;
    for (std::size_t i = 0; i < N; ++i) p[i] = z[i] + beta * p[i];
    rnorm = std::sqrt(kern::det_dot(r.data(), r.data(), N));
    res.iterations = it + 1;
  }
  res.residual = rnorm;
  if (rnorm > stop) throw SolverAbort("pcg: no convergence after max iterations");
  return res;
}

namespace {

// Radial Dirichlet solve on the full node vector. Boundary rows are replaced
// by identities after moving their coupling into the rhs.
Vec radial_dirichlet(const Operators& op, bool l1, Vec rhs, double inner_bv, double outer_bv) {
  const Grid& g = *op.g;
  const std::size_t N = g.r.size();
  Vec d = op.kd, l = op.kl;
  if (l1)
    for (std::size_t i = 0; i < N; ++i) d[i] += op.l1_extra[i];
  const bool inner_dirichlet = l1 || g.interior[0] == 0;
  if (inner_dirichlet) {
    rhs[0] = inner_bv;
    rhs[1] -= l[0] * inner_bv;
    d[0] = 1.0;
    l[0] = 0.0;
  }
  rhs[N - 1] = outer_bv;
  rhs[N - 2] -= l[N - 2] * outer_bv;
  d[N - 1] = 1.0;
  l[N - 2] = 0.0;
  thomas_solve(std::move(d), std::move(l), rhs);
  return rhs;
}

double radial_residual_linf(const Operators& op, bool l1, const Vec& u, const Vec& rhs) {
  const Grid& g = *op.g;
  Vec ku;
  apply_K(op, u, ku);
  double m = 0.0;
  for (std::size_t i = 1; i + 1 < g.r.size(); ++i) {
    double res = ku[i] - rhs[i];
    if (l1) res += op.l1_extra[i] * u[i];
    m = std::max(m, std::abs(res));
  }
  return m;
}

}  // namespace

EllipticSolveReport solve_poisson(const Operators& op, const Vec& f) {
  const Grid& g = *op.g;
  EllipticSolveReport rep;
  Vec rhs(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) rhs[i] = g.interior[i] ? g.wq[i] * f[i] : 0.0;
  if (g.mode == GridMode::radial) {
    rep.solution = radial_dirichlet(op, false, rhs, 0.0, 0.0);
    rep.solver = "thomas";
    rep.iterations = 1;
    rep.residual_linf = radial_residual_linf(op, false, rep.solution, rhs);
  } else {
    rep.solution.assign(g.size(), 0.0);
    const auto apply = [&](const Vec& u, Vec& out) { apply_K(op, u, out); };
    const PcgResult pr = pcg(apply, op.cdiag, rhs, rep.solution, op.pcg_tol, op.pcg_maxit);
    rep.solver = "jacobi-pcg";
    rep.iterations = pr.iterations;
    rep.residual_linf = pr.residual;
  }
  return rep;
}

EllipticSolveReport harmonic_extension(const Operators& op,
                                       const std::function<double(const double*)>& bval) {
  const Grid& g = *op.g;
  EllipticSolveReport rep;
  if (g.mode == GridMode::radial) {
    std::array<double, kMaxN> x{};
    x[0] = g.dom.radius;
    const double outer = bval(x.data());
    double inner = 0.0;
    if (g.interior[0] == 0) {
      x[0] = g.dom.kind == DomainKind::annulus ? g.dom.inner : g.r[0];
      inner = bval(x.data());
    }
    Vec rhs(g.size(), 0.0);
    rep.solution = radial_dirichlet(op, false, rhs, inner, outer);
    rep.solver = "thomas";
    rep.iterations = 1;
    rep.residual_linf = radial_residual_linf(op, false, rep.solution, rhs);
  } else {
    const int n = g.n;
    const int tn = 2 * n;
    Vec rhs(g.size(), 0.0);
    std::array<double, kMaxN> y{};
    for (std::size_t k = 0; k < g.size(); ++k) {
      for (int l = 0; l < tn; ++l) {
        if (g.nbr[k * tn + l] >= 0) continue;
        const int axis = l / 2;
        const double dir = (l & 1) ? 1.0 : -1.0;
        const double th = g.theta[k * tn + l];
        for (int i = 0; i < n; ++i) y[i] = g.xy[k * n + i];
        y[axis] += dir * th * g.h;
        rhs[k] += op.link_coef / th * bval(y.data());
      }
    }
    rep.solution.assign(g.size(), 0.0);
    const auto apply = [&](const Vec& u, Vec& out) { apply_K(op, u, out); };
    const PcgResult pr = pcg(apply, op.cdiag, rhs, rep.solution, op.pcg_tol, op.pcg_maxit);
    rep.solver = "jacobi-pcg";
    rep.iterations = pr.iterations;
    rep.residual_linf = pr.residual;
  }
  return rep;
}

EllipticSolveReport solve_radial_l1(const Operators& op, double outer_value, double inner_value) {
  const Grid& g = *op.g;
  if (g.mode != GridMode::radial) throw SolverAbort("solve_radial_l1 needs a radial grid");
  EllipticSolveReport rep;
  Vec rhs(g.size(), 0.0);
  rep.solution = radial_dirichlet(op, true, rhs, inner_value, outer_value);
  rep.solver = "thomas";
  rep.iterations = 1;
  rep.residual_linf = radial_residual_linf(op, true, rep.solution, rhs);
  return rep;
}

}  // namespace ylab

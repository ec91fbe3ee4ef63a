// Backward-Euler steppers for the normalized and physical flows.
#include "ylab/flow.hpp"

#include <algorithm>
#include <cmath>

#include "ylab/kernels.hpp"

namespace ylab {

namespace {

double volume(const Grid& g, const Vec& u, double p1) { return integrate_pow(g, u, p1); }

// Damped Newton for G(u) = diagscale .* (u^p - base) + dt K u = 0 on interior
// nodes, with u > 0 maintained. Shared by both flows:
//   normalized: diagscale_i = w_i (1 - dt r_old), base_i = u_old^p / (1 - dt r_old)
// folds into    G_i = w_i (u^p - uold^p) + dt (Ku)_i - dt r_old w_i u^p
//   physical:   G_i = w_i (q^p - rho_old) + dt (Kq)_i
struct NewtonProblem {
  const Grid* g;
  const Operators* op;
  double p;
  double dt;
  double a;        // multiplies w_i u^p in G (1 - dt r_old, or 1)
  const Vec* rhs;  // w_i * rhs_i subtracted (uold^p or rho_old)
};

bool newton_solve(const NewtonProblem& nb, Vec& u, int max_iter, double tol, int& iters) {
  const Grid& g = *nb.g;
  const Operators& op = *nb.op;
  const std::size_t N = u.size();
  Vec ku(N), G(N), delta(N);
  Vec up(N), upm1(N);
  double gscale = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    if (g.interior[i]) gscale = std::max(gscale, g.wq[i] * std::abs((*nb.rhs)[i]));
  if (gscale <= 0.0) gscale = 1.0;

  for (iters = 0; iters < max_iter; ++iters) {
    up = pow_field(u, nb.p);
    apply_K(op, u, ku);
    double gnorm = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      G[i] = g.interior[i] ? g.wq[i] * (nb.a * up[i] - (*nb.rhs)[i]) + nb.dt * ku[i] : 0.0;
      gnorm = std::max(gnorm, std::abs(G[i]));
    }
    if (gnorm <= tol * gscale) return true;

    upm1 = pow_field(u, nb.p - 1.0);
    if (g.mode == GridMode::radial) {
      Vec d(N), l(N - 1);
      for (std::size_t i = 0; i < N; ++i)
        d[i] = nb.p * g.wq[i] * upm1[i] * nb.a + nb.dt * op.kd[i];
      for (std::size_t i = 0; i + 1 < N; ++i) l[i] = nb.dt * op.kl[i];
      // Dirichlet rows become identities.
      for (std::size_t i = 0; i < N; ++i) {
        if (g.interior[i]) continue;
        d[i] = 1.0;
        if (i > 0) l[i - 1] = 0.0;
        if (i + 1 < N) l[i] = 0.0;
      }
      delta = G;
      for (std::size_t i = 0; i < N; ++i) delta[i] = -delta[i];
      thomas_solve(std::move(d), std::move(l), delta);
    } else {
      Vec diag(N);
      for (std::size_t i = 0; i < N; ++i)
        diag[i] = nb.p * g.wq[i] * upm1[i] * nb.a + nb.dt * op.cdiag[i];
      const auto apply = [&](const Vec& v, Vec& out) {
        apply_K(op, v, out);
        for (std::size_t i = 0; i < N; ++i)
          out[i] = nb.p * g.wq[i] * upm1[i] * nb.a * v[i] + nb.dt * out[i];
      };
      delta.assign(N, 0.0);
      Vec negG(N);
      for (std::size_t i = 0; i < N; ++i) negG[i] = -G[i];
      try {
        pcg(apply, diag, negG, delta, 0.1 * op.pcg_tol, op.pcg_maxit);
      } catch (const SolverAbort&) {
        return false;
      }
    }

    // Scaled damping keeps the iterate strictly positive.
    double alpha = 1.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (!g.interior[i] || delta[i] >= 0.0) continue;
      const double amax = -u[i] / delta[i];
      alpha = std::min(alpha, 0.9 * amax);
    }
    if (!(alpha > 1e-14)) return false;
    for (std::size_t i = 0; i < N; ++i)
      if (g.interior[i]) u[i] += alpha * delta[i];
  }
  return false;
}

}  // namespace

void init_flow_state(const Grid& g, const Operators& op, FlowState& st, const Vec& u0,
                     const FlowOptions& opt) {
  const DimensionConstants& dc = dimension_constants(g.n);
  st.u = u0;
  for (std::size_t i = 0; i < st.u.size(); ++i) {
    if (!g.interior[i]) st.u[i] = 0.0;
    else if (!(st.u[i] > 0.0)) throw SolverAbort("initial data must be positive on the interior");
  }
  const double v = volume(g, st.u, dc.p + 1.0);
  if (!(v > 0.0)) throw SolverAbort("initial data has no volume");
  const double c = std::pow(v, -1.0 / (dc.p + 1.0));
  for (auto& x : st.u) x *= c;
  st.s = 0.0;
  st.t = 0.0;
  st.dt = opt.dt_init;
  st.step = 0;
  st.r = energy(op, st.u);
  st.vol = volume(g, st.u, dc.p + 1.0);
  st.m2 = curvature_moment(g, op, st.u, 2.0);
}

StepInfo step_yamabe(const Grid& g, const Operators& op, FlowState& st, const FlowOptions& opt) {
  const DimensionConstants& dc = dimension_constants(g.n);
  const double p = dc.p;
  StepInfo info;
  const double r_old = st.r;
  const Vec uold_p = pow_field(st.u, p);
  Vec rhs(st.u.size());

  double dt = std::min({st.dt, opt.dt_max, opt.r_dt_cap / std::max(r_old, 1e-30)});
  dt = std::max(dt, opt.dt_min);

  for (;;) {
    const double a = 1.0 - dt * r_old;
    if (a <= 0.0) throw SolverAbort("step_yamabe: dt cap failed to keep the solve definite");
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = uold_p[i];
    NewtonProblem nb{&g, &op, p, dt, a, &rhs};
    Vec u = st.u;
    int iters = 0;
    bool ok = newton_solve(nb, u, opt.max_newton, opt.newton_tol, iters);
    double r_new = 0.0;
    if (ok) {
      const double v = volume(g, u, p + 1.0);
      ok = v > 0.0 && std::isfinite(v);
      if (ok) {
        info.vol_drift_pre = std::abs(v - 1.0);
        const double c = std::pow(v, -1.0 / (p + 1.0));
        for (auto& x : u) x *= c;
        r_new = energy(op, u);
        // Oversized moves poison the time-series measurements; retry smaller.
        if (std::abs(r_new - r_old) > 3.0 * opt.rel_target * std::abs(r_old) && dt > opt.dt_min)
          ok = false;
      }
    }
    if (!ok) {
      ++info.rejects;
      if (info.rejects > opt.max_rejects)
        throw SolverAbort("step_yamabe: too many rejected steps at s = " + std::to_string(st.s));
      dt = std::max(0.5 * dt, opt.dt_min);
      continue;
    }

    info.newton_iters = iters;
    info.dt_used = dt;
    st.u = std::move(u);
    st.s += dt;
    st.t += 0.5 * (r_old + r_new) * dt;
    st.r = r_new;
    st.vol = volume(g, st.u, p + 1.0);
    st.m2 = curvature_moment(g, op, st.u, 2.0);
    st.step += 1;

    const double realized = std::abs(r_new - r_old) / std::max(std::abs(r_old), 1e-30);
    double next = realized > opt.rel_target ? dt * std::max(0.5, 0.9 * opt.rel_target / realized)
                                            : dt * opt.growth;
    next = std::min({next, opt.dt_max, opt.r_dt_cap / std::max(r_new, 1e-30)});
    st.dt = std::max(next, opt.dt_min);
    return info;
  }
}

EnergySummary energy_functionals(const Grid& g, const Operators& op, const Vec& u) {
  const DimensionConstants& dc = dimension_constants(g.n);
  EnergySummary es;
  es.r = energy(op, u);
  es.vol = volume(g, u, dc.p + 1.0);
  es.m2 = curvature_moment(g, op, u, 2.0);
  es.min_u = std::numeric_limits<double>::infinity();
  es.max_u = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!g.interior[i]) continue;
    es.min_u = std::min(es.min_u, u[i]);
    es.max_u = std::max(es.max_u, u[i]);
  }
  es.yamabe = es.r / std::pow(es.vol, (g.n - 2.0) / g.n);
  es.fmono = (2.0 / g.n) * std::pow(std::max(es.r, 0.0), 0.5 * g.n);
  return es;
}

Vec scalar_curvature(const Grid& g, const Operators& op, const Vec& u) {
  const DimensionConstants& dc = dimension_constants(g.n);
  const double r = energy(op, u);
  Vec ku;
  apply_K(op, u, ku);
  const Vec up = pow_field(u, dc.p);
  Vec R(u.size(), r);
  for (std::size_t i = 0; i < u.size(); ++i)
    if (g.interior[i]) R[i] = ku[i] / (g.wq[i] * up[i]);
  return R;
}

double curvature_moment(const Grid& g, const Operators& op, const Vec& u, double q) {
  const DimensionConstants& dc = dimension_constants(g.n);
  const double r = energy(op, u);
  Vec ku;
  apply_K(op, u, ku);
  const Vec up = pow_field(u, dc.p);
  Vec terms(u.size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!g.interior[i]) continue;
    const double Ri = ku[i] / (g.wq[i] * up[i]);
    const double dev = std::abs(Ri - r);
    const double wgt = g.wq[i] * up[i] * u[i];  // w u^{p+1}
    terms[i] = q == 2.0 ? wgt * dev * dev : wgt * std::pow(dev, q);
  }
  return kern::det_sum(terms.data(), terms.size());
}

// ---------------------------------------------------------------------------
// Physical flow

void init_physical_state(const Grid& g, PhysicalState& st, const Vec& rho0,
                         const FlowOptions& opt) {
  const DimensionConstants& dc = dimension_constants(g.n);
  st.rho = rho0;
  for (std::size_t i = 0; i < st.rho.size(); ++i) {
    if (!g.interior[i]) st.rho[i] = 0.0;
    else if (!(st.rho[i] > 0.0))
      throw SolverAbort("physical initial data must be positive on the interior");
  }
  st.tau = 0.0;
  st.dt = opt.dt_init;
  st.step = 0;
  st.mass_p = integrate_pow(g, pow_field(st.rho, dc.m), dc.p + 1.0);
}

StepInfo step_physical(const Grid& g, const Operators& op, PhysicalState& st,
                       const FlowOptions& opt) {
  const DimensionConstants& dc = dimension_constants(g.n);
  const double p = dc.p;
  StepInfo info;
  const double g_old = std::pow(st.mass_p, 2.0 / g.n);
  Vec q0 = pow_field(st.rho, dc.m);
  for (std::size_t i = 0; i < q0.size(); ++i)
    if (!g.interior[i]) q0[i] = 0.0;

  double dt = std::min(st.dt, opt.dt_max);
  dt = std::max(dt, opt.dt_min);

  for (;;) {
    NewtonProblem nb{&g, &op, p, dt, 1.0, &st.rho};
    Vec q = q0;
    int iters = 0;
    bool ok = newton_solve(nb, q, opt.max_newton, opt.newton_tol, iters);
    double mass_new = 0.0, g_new = 0.0;
    if (ok) {
      mass_new = integrate_pow(g, q, p + 1.0);
      g_new = std::pow(mass_new, 2.0 / g.n);
      ok = std::isfinite(g_new) && g_new > 0.0;
      if (ok && std::abs(g_new - g_old) > 3.0 * opt.rel_target * g_old && dt > opt.dt_min)
        ok = false;
    }
    if (!ok) {
      ++info.rejects;
      if (info.rejects > opt.max_rejects)
        throw SolverAbort("step_physical: too many rejected steps at tau = " +
                          std::to_string(st.tau));
      dt = std::max(0.5 * dt, opt.dt_min);
      continue;
    }

    info.newton_iters = iters;
    info.dt_used = dt;
    st.rho = pow_field(q, p);
    for (std::size_t i = 0; i < st.rho.size(); ++i)
      if (!g.interior[i]) st.rho[i] = 0.0;
    st.tau += dt;
    st.mass_p = mass_new;
    st.step += 1;

    const double realized = std::abs(g_new - g_old) / std::max(g_old, 1e-300);
    double next = realized > opt.rel_target ? dt * std::max(0.5, 0.9 * opt.rel_target / realized)
                                            : dt * opt.growth;
    st.dt = std::max(std::min(next, opt.dt_max), opt.dt_min);
    return info;
  }
}

ExtinctionReport estimate_extinction(const std::vector<double>& tau,
                                     const std::vector<double>& mass_p, int n) {
  ExtinctionReport rep;
  const std::size_t N = tau.size();
  if (N < 20 || mass_p.size() != N)
    throw SolverAbort("estimate_extinction: need at least 20 samples");
  std::vector<double> G(N);
  for (std::size_t i = 0; i < N; ++i) G[i] = std::pow(mass_p[i], 2.0 / n);
  rep.monotone = true;
  for (std::size_t i = 1; i < N; ++i)
    if (G[i] > G[i - 1] + 1e-12 * G[0]) rep.monotone = false;

  const auto window_tstar = [&](std::size_t lo, std::size_t hi, ExtinctionReport* out) {
    std::vector<double> x(tau.begin() + lo, tau.begin() + hi);
    std::vector<double> y(G.begin() + lo, G.begin() + hi);
    const LineFit lf = fit_line(x, y);
    if (!(lf.slope < 0.0)) throw SolverAbort("estimate_extinction: non-decaying trailing fit");
    if (out) {
      out->slope = lf.slope;
      out->intercept = lf.intercept;
      out->fit_rms = lf.rms_residual / G[0];
      out->samples = static_cast<int>(hi - lo);
    }
    return -lf.intercept / lf.slope;
  };

  const std::size_t lo_last = N - std::max<std::size_t>(N / 5, 10);
  const std::size_t lo_prev = N - std::min(N, 2 * (N - lo_last));
  rep.t_star = window_tstar(lo_last, N, &rep);
  const double t_prev = window_tstar(lo_prev, lo_last, nullptr);
  rep.window_gap = std::abs(t_prev - rep.t_star) / rep.t_star;
  return rep;
}

double rescaled_time(int n, double t_star, double tau) {
  return 0.25 * (n + 2.0) * std::log(t_star / (t_star - tau));
}

Vec physical_to_rescaled(const Grid& g, const Vec& rho, double sigma) {
  const DimensionConstants& dc = dimension_constants(g.n);
  const double c = std::pow(0.25 * (g.n + 2.0) / sigma, 0.25 * (g.n - 2.0));
  Vec v = pow_field(rho, dc.m);
  for (auto& x : v) x *= c;
  return v;
}

Vec rho_from_unit(const Grid& g, const Vec& u, double t_star) {
  const DimensionConstants& dc = dimension_constants(g.n);
  const double c = std::pow(0.25 * (g.n + 2.0) / t_star, 0.25 * (g.n - 2.0));
  Vec rho(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) rho[i] = std::pow(u[i] / c, dc.p);
  return rho;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

Vec dome_field(const Grid& g) {
  const Domain& dom = g.dom;
  Vec d(g.size(), 0.0);
  const auto at = [&](const double* x) {
    switch (dom.kind) {
      case DomainKind::ball: {
        double s = 0.0;
        for (int i = 0; i < g.n; ++i) s += x[i] * x[i];
        return 1.0 - s / (dom.radius * dom.radius);
      }
      case DomainKind::annulus: {
        double s = 0.0;
        for (int i = 0; i < g.n; ++i) s += x[i] * x[i];
        const double rr = std::sqrt(s);
        const double z = (rr - dom.inner) / (dom.radius - dom.inner);
        return std::sin(3.14159265358979323846 * std::clamp(z, 0.0, 1.0));
      }
      case DomainKind::box: {
        double v = 1.0;
        for (int i = 0; i < g.n; ++i)
          v *= std::sin(3.14159265358979323846 * (x[i] - dom.lo[i]) / (dom.hi[i] - dom.lo[i]));
        return v;
      }
    }
    return 0.0;
  };
  if (g.mode == GridMode::radial) {
    std::array<double, kMaxN> x{};
    for (std::size_t i = 0; i < g.size(); ++i) {
      x[0] = g.r[i];
      d[i] = at(x.data());
    }
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = at(&g.xy[i * g.n]);
  }
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = g.interior[i] ? std::max(d[i], 0.0) : 0.0;
  return d;
}

}  // namespace

Vec preset_initial(const Grid& g, const Operators& op, const std::string& name, double lambda0,
                   double eps) {
  if (name == "dome") return dome_field(g);
  if (name == "bubble" || name == "perturbed-bubble") {
    BubbleParams bp;
    bp.lambda = lambda0;
    check_resolution(g, bp);
    Vec u = projected_bubble(g, op, bp).pu;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::max(u[i], 0.0);
    if (name == "perturbed-bubble") {
      const Vec d = dome_field(g);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] *= 1.0 + eps * d[i];
    }
    return u;
  }
  throw ConfigError("unknown initial preset: " + name);
}

}  // namespace ylab

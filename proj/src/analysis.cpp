// Bubble fitting and the diagnostics derived from fitted runs.
#include "ylab/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "ylab/flow.hpp"
#include "ylab/kernels.hpp"

namespace ylab {

namespace {

// Weighted product against wq * u^{p-1} (zero on Dirichlet nodes).
struct WProd {
  Vec w;
  WProd(const Grid& g, const Vec& u, double p) {
    w = pow_field(u, p - 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = g.interior[i] ? g.wq[i] * w[i] : 0.0;
  }
  double operator()(const Vec& f, const Vec& h) const {
    return kern::det_dot3(w.data(), f.data(), h.data(), w.size());
  }
};

// PU and its parameter derivatives at theta = (log lambda, a).
struct FitFields {
  Vec pu;
  Vec d_loglam;
  std::vector<Vec> d_a;  // cartesian only
};

FitFields fit_fields(const Grid& g, const Operators& op, const BubbleParams& bp,
                     bool with_center) {
  const int n = g.n;
  const double l = bp.lambda;
  FitFields ff;
  ff.pu = projected_bubble(g, op, bp).pu;

  const auto dil = [&](const double* x) {
    double rho2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = x[i] - bp.a[i];
      rho2 += d * d;
    }
    return bubble_value(n, bp, x) * 0.5 * (n - 2) * (1.0 - l * l * rho2) / (1.0 + l * l * rho2);
  };
  Vec du(g.size());
  if (g.mode == GridMode::radial) {
    std::array<double, kMaxN> x{};
    for (std::size_t i = 0; i < g.size(); ++i) {
      x[0] = g.r[i];
      du[i] = dil(x.data());
    }
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) du[i] = dil(&g.xy[i * n]);
  }
  const Vec hs = harmonic_extension(op, dil).solution;
  ff.d_loglam.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) ff.d_loglam[i] = du[i] - hs[i];

  if (with_center && g.mode == GridMode::cartesian) {
    for (int j = 0; j < n; ++j) {
      const auto tr = [&](const double* x) {
        double rho2 = 0.0;
        for (int i = 0; i < n; ++i) {
          const double d = x[i] - bp.a[i];
          rho2 += d * d;
        }
        return (n - 2) * bubble_value(n, bp, x) * l * l * (x[j] - bp.a[j]) / (1.0 + l * l * rho2);
      };
      Vec tj(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) tj[i] = tr(&g.xy[i * n]);
      const Vec hj = harmonic_extension(op, tr).solution;
      for (std::size_t i = 0; i < g.size(); ++i) tj[i] -= hj[i];
      ff.d_a.push_back(std::move(tj));
    }
  }
  return ff;
}

void project_center(const Grid& g, double delta0, BubbleParams& bp) {
  if (g.mode == GridMode::radial) {
    bp.a.fill(0.0);
    return;
  }
  const double want = 0.5 * delta0;
  for (int tries = 0; tries < 64; ++tries) {
    if (g.dom.boundary_distance(bp.a.data()) >= want) return;
    // Pull toward the domain's natural center.
    std::array<double, kMaxN> c{};
    if (g.dom.kind == DomainKind::box)
      for (int i = 0; i < g.n; ++i) c[i] = 0.5 * (g.dom.lo[i] + g.dom.hi[i]);
    for (int i = 0; i < g.n; ++i) bp.a[i] = c[i] + 0.9 * (bp.a[i] - c[i]);
  }
}

}  // namespace

BubbleFit fit_bubble(const Grid& g, const Operators& op, const Vec& u, const FitOptions& opt,
                     const BubbleFit* warm) {
  const DimensionConstants& dc = dimension_constants(g.n);
  const int n = g.n;
  const bool with_center = g.mode == GridMode::cartesian;
  BubbleFit fit;
  const double delta0 = opt.delta0 > 0.0 ? opt.delta0 : 0.25 * g.dom.inradius();

  if (warm && warm->params.lambda > 0.0) {
    fit.params = warm->params;
  } else {
    double umax = 0.0;
    std::size_t imax = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (g.interior[i] && u[i] > umax) {
        umax = u[i];
        imax = i;
      }
    const double amp = dc.u_coeff * std::pow(dc.sobolev, -0.25 * (n - 2));
    fit.params.lambda =
        std::max(std::pow(std::max(umax, 1e-12) / amp, 2.0 / (n - 2)), 0.1 / g.dom.inradius());
    if (with_center)
      for (int i = 0; i < n; ++i) fit.params.a[i] = g.xy[imax * n + i];
  }
  project_center(g, delta0, fit.params);

  const int npar = with_center ? 1 + n : 1;
  std::vector<double> H(npar * npar), rhs(npar);
  // The modulation minimizes the weighted distance, so the residual is
  // orthogonal to the whole kernel span and the b projections stay clean.
  const WProd wfit(g, u, dc.p);
  const double unorm2 = wfit(u, u);

  for (int it = 0; it < opt.max_iter; ++it) {
    fit.iterations = it + 1;
    const FitFields ff = fit_fields(g, op, fit.params, with_center);
    const double d = wfit(ff.pu, ff.pu);
    if (!(d > 0.0)) return fit;
    fit.alpha = wfit(u, ff.pu) / d;
    Vec res(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) res[i] = u[i] - fit.alpha * ff.pu[i];

    std::vector<const Vec*> J;
    J.push_back(&ff.d_loglam);
    for (const auto& da : ff.d_a) J.push_back(&da);
    for (int k = 0; k < npar; ++k) {
      rhs[k] = wfit(res, *J[k]) / fit.alpha;
      for (int j = k; j < npar; ++j) {
        H[k * npar + j] = wfit(*J[k], *J[j]);
        H[j * npar + k] = H[k * npar + j];
      }
    }
    for (int k = 0; k < npar; ++k) H[k * npar + k] *= 1.0 + 1e-12;
    std::vector<double> step = rhs;
    std::vector<double> A = H;
    if (!cholesky_solve(A, step, npar)) return fit;

    // Trust region keeps single Gauss-Newton moves modest.
    double scale = 1.0;
    if (std::abs(step[0]) > 0.3) scale = std::min(scale, 0.3 / std::abs(step[0]));
    for (int k = 1; k < npar; ++k) {
      const double cap = 0.1 * g.dom.inradius();
      if (std::abs(step[k]) > cap) scale = std::min(scale, cap / std::abs(step[k]));
    }
    fit.params.lambda *= std::exp(scale * step[0]);
    for (int k = 1; k < npar; ++k) fit.params.a[k - 1] += scale * step[k];
    project_center(g, delta0, fit.params);

    double move = std::abs(scale * step[0]);
    for (int k = 1; k < npar; ++k)
      move += std::abs(scale * step[k]) / std::max(g.dom.inradius(), 1e-30);
    if (move < opt.tol) {
      fit.converged = true;
      break;
    }
  }

  const FitFields ff = fit_fields(g, op, fit.params, false);
  const double d = wfit(ff.pu, ff.pu);
  fit.alpha = wfit(u, ff.pu) / d;
  fit.eta_l2 = std::sqrt(std::max(0.0, unorm2 - fit.alpha * fit.alpha * d));
  return fit;
}

DecompositionReport decompose(const Grid& g, const Operators& op, const Vec& u,
                              const BubbleFit& fit, double h_center) {
  const DimensionConstants& dc = dimension_constants(g.n);
  const int n = g.n;
  DecompositionReport rep;
  rep.fit = fit;
  const KernelBasis kb = kernel_fields(g, op, fit.params, dc.sobolev);
  const double scale = std::pow(dc.sobolev, -0.25 * (n - 2));

  Vec w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i] - fit.alpha * kb.x0[i] / scale;
  rep.w_h1 = std::sqrt(std::max(0.0, energy(op, w)));

  const WProd wp(g, u, dc.p);
  rep.kappa0 = wp(kb.x0, kb.x0);
  rep.kappa_s = wp(kb.xs, kb.xs);
  rep.b.assign(n + 2, 0.0);
  const double wnorm2 = wp(w, w);

  // Unstable coefficients: projections of the flow direction -(R - r)u onto
  // the kernel basis in the evolving weighted product. The Rayleigh quotient
  // keeps <(R - r)u, u> = 0 exact, which is what makes b0 small.
  const Vec curv = scalar_curvature(g, op, u);
  const double rq = energy(op, u) / std::max(integrate_pow(g, u, dc.p + 1.0), 1e-300);
  Vec vel(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    vel[i] = g.interior[i] ? (curv[i] - rq) * u[i] : 0.0;
  rep.b[0] = -wp(vel, kb.x0);
  rep.b[n + 1] = -wp(vel, kb.xs);

  double kernel_norm2 = 0.0;
  Vec wperp = w;
  if (kb.radial_l1) {
    rep.kappa_t = wp(kb.xt[0], kb.xt[0]) / n;
    // Radial states have no l = 1 component; remove the (bubble, dilation)
    // span from w via the 2x2 Gram system.
    const double g00 = rep.kappa0, g11 = rep.kappa_s, g01 = wp(kb.x0, kb.xs);
    const double c0 = wp(kb.x0, w), c1 = wp(kb.xs, w);
    const double det = g00 * g11 - g01 * g01;
    double beta0 = 0.0, beta1 = 0.0;
    if (std::abs(det) > 1e-14 * std::max(g00 * g11, 1e-300)) {
      beta0 = (g11 * c0 - g01 * c1) / det;
      beta1 = (g00 * c1 - g01 * c0) / det;
    } else if (g00 > 0.0 && g11 > 0.0) {
      beta0 = c0 / g00;
      beta1 = c1 / g11;
    }
    kernel_norm2 = beta0 * c0 + beta1 * c1;
    for (std::size_t i = 0; i < w.size(); ++i)
      wperp[i] = w[i] - beta0 * kb.x0[i] - beta1 * kb.xs[i];
  } else {
    std::vector<const Vec*> X;
    X.push_back(&kb.x0);
    for (const auto& t : kb.xt) X.push_back(&t);
    X.push_back(&kb.xs);
    const int m = static_cast<int>(X.size());
    for (int j = 1; j <= n; ++j) rep.b[j] = -wp(vel, kb.xt[j - 1]);
    std::vector<double> G(m * m), c(m);
    for (int i = 0; i < m; ++i) {
      c[i] = wp(*X[i], w);
      for (int j = i; j < m; ++j) G[i * m + j] = G[j * m + i] = wp(*X[i], *X[j]);
    }
    rep.kappa_t = G[1 * m + 1];
    std::vector<double> beta = c, A = G;
    if (cholesky_solve(A, beta, m)) {
      for (int i = 0; i < m; ++i) {
        kernel_norm2 += beta[i] * c[i];
        for (std::size_t k = 0; k < w.size(); ++k) wperp[k] -= beta[i] * (*X[i])[k];
      }
    }
  }
  rep.eta_w = std::sqrt(std::max(0.0, wp(wperp, wperp)));
  rep.ortho_defect = wnorm2 > 0.0 ? std::sqrt(std::max(0.0, kernel_norm2 / wnorm2)) : 0.0;

  double close = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!g.interior[i] || !(kb.x0[i] > 0.0)) continue;
    close = std::max(close, std::abs(u[i] / kb.x0[i] - 1.0));
  }
  rep.closeness = close;

  double hc = h_center;
  if (hc < 0.0) hc = green_regular_at_center(g, op, fit.params.a.data());
  Vec dn = boundary_normal_derivative(g, u);
  Vec terms(g.bq.size());
  for (std::size_t k = 0; k < g.bq.size(); ++k) {
    double xnu = 0.0;
    for (int i = 0; i < n; ++i)
      xnu += (g.bq.x[k * n + i] - fit.params.a[i]) * g.bq.nu[k * n + i];
    terms[k] = g.bq.w[k] * xnu * dn[k] * dn[k];
  }
  rep.pohozaev_lhs = kern::det_sum(terms.data(), terms.size());
  rep.pohozaev_pred = fit.alpha * fit.alpha * dc.poho_c2 * hc *
                      std::pow(fit.params.lambda, 2.0 - n);
  return rep;
}

PohozaevCheck pohozaev_bubble_check(const Grid& g, const Operators& op, const BubbleParams& bp) {
  const DimensionConstants& dc = dimension_constants(g.n);
  const int n = g.n;
  PohozaevCheck pc;
  const Vec pu = projected_bubble(g, op, bp).pu;
  const Vec dn = boundary_normal_derivative(g, pu);
  Vec terms(g.bq.size());
  for (std::size_t k = 0; k < g.bq.size(); ++k) {
    double xnu = 0.0;
    for (int i = 0; i < n; ++i) xnu += (g.bq.x[k * n + i] - bp.a[i]) * g.bq.nu[k * n + i];
    terms[k] = g.bq.w[k] * xnu * dn[k] * dn[k];
  }
  pc.lhs = kern::det_sum(terms.data(), terms.size());
  const double hc = green_regular_at_center(g, op, bp.a.data());
  pc.pred = dc.poho_c2 * hc * std::pow(bp.lambda, 2.0 - n);
  pc.ratio = pc.lhs / pc.pred;
  return pc;
}

std::vector<double> centered_derivative(const std::vector<double>& x,
                                        const std::vector<double>& y) {
  const std::size_t N = x.size();
  std::vector<double> d(N, 0.0);
  if (N < 2) return d;
  for (std::size_t k = 1; k + 1 < N; ++k) {
    const double x0 = x[k - 1], x1 = x[k], x2 = x[k + 1];
    d[k] = y[k - 1] * (x1 - x2) / ((x0 - x1) * (x0 - x2)) +
           y[k] * (2.0 * x1 - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
           y[k + 1] * (x1 - x0) / ((x2 - x0) * (x2 - x1));
  }
  d[0] = (y[1] - y[0]) / (x[1] - x[0]);
  d[N - 1] = (y[N - 1] - y[N - 2]) / (x[N - 1] - x[N - 2]);
  return d;
}

RateReport rate_report(const std::vector<RateSample>& samples, int n, double h_center) {
  const DimensionConstants& dc = dimension_constants(n);
  RateReport rr;
  const std::size_t N = samples.size();
  rr.samples = static_cast<int>(N);
  if (N < 8) throw SolverAbort("rate_report: need at least 8 samples in the window");

  std::vector<double> s(N), lam(N), loglam(N), logm2(N);
  for (std::size_t i = 0; i < N; ++i) {
    s[i] = samples[i].s;
    lam[i] = samples[i].lambda;
    loglam[i] = std::log(samples[i].lambda);
    logm2[i] = std::log(std::max(samples[i].m2, 1e-300));
  }
  rr.m2_slope = fit_line(loglam, logm2).slope;

  const std::vector<double> lamdot = centered_derivative(s, lam);
  std::vector<double> plat;
  for (std::size_t k = 1; k + 1 < N; ++k)
    plat.push_back(lamdot[k] * std::pow(lam[k], n - 3.0) / (dc.rate_c3 * h_center));
  double mean = 0.0;
  for (double v : plat) mean += v;
  mean /= static_cast<double>(plat.size());
  double dev = 0.0;
  for (double v : plat) dev += (v - mean) * (v - mean);
  dev = std::sqrt(dev / static_cast<double>(plat.size()));
  rr.plateau_mean = mean;
  rr.plateau_dev = std::abs(mean) > 0.0 ? dev / std::abs(mean) : 0.0;
  rr.plateau_mean_alt = mean * dc.rate_c3 / dc.rate_c3_alt;

  const std::size_t head = std::max<std::size_t>(3, N / 10);
  double bf = 0.0, bl = 0.0;
  for (std::size_t i = 0; i < head; ++i) {
    bf += std::abs(samples[i].b0) / std::sqrt(std::max(samples[i].m2, 1e-300));
    bl += std::abs(samples[N - 1 - i].b0) / std::sqrt(std::max(samples[N - 1 - i].m2, 1e-300));
  }
  rr.b0_ratio_first = bf / static_cast<double>(head);
  rr.b0_ratio_last = bl / static_cast<double>(head);

  std::vector<double> lg, lgap;
  for (std::size_t i = 0; i < N; ++i) {
    if (samples[i].r > dc.sobolev) {
      lg.push_back(loglam[i]);
      lgap.push_back(std::log(samples[i].r - dc.sobolev));
    }
  }
  rr.r_gap_slope = lg.size() >= 4 ? fit_line(lg, lgap).slope : 0.0;
  return rr;
}

DichotomyReport classify_dichotomy(const std::vector<RateSample>& samples, double lambda_stop,
                                   double m2_tol) {
  DichotomyReport rep;
  if (samples.empty()) {
    rep.evidence = "no samples";
    return rep;
  }
  const RateSample& last = samples.back();
  rep.lambda_final = last.lambda;
  rep.m2_final = last.m2;
  double lam_max = 0.0;
  for (const auto& smp : samples) lam_max = std::max(lam_max, smp.lambda);
  if (last.lambda >= lambda_stop && last.lambda >= 0.95 * lam_max) {
    rep.outcome = FlowOutcome::bubble_concentration;
    rep.evidence = "lambda reached " + fmt_g17(last.lambda) + " with M2 = " + fmt_g17(last.m2);
  } else if (last.m2 <= m2_tol && lam_max < lambda_stop) {
    rep.outcome = FlowOutcome::steady_state;
    rep.evidence = "M2 settled at " + fmt_g17(last.m2) + " with lambda bounded by " +
                   fmt_g17(lam_max);
  } else {
    rep.evidence = "lambda max " + fmt_g17(lam_max) + ", final M2 " + fmt_g17(last.m2);
  }
  return rep;
}

}  // namespace ylab

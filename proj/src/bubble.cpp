// Bubble fields, Dirichlet projections, kernel bases, dimension constants.
#include "ylab/bubble.hpp"

#include <cmath>

namespace ylab {

namespace {

double dist2(int n, const double* a, const double* x) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = x[i] - a[i];
    s += d * d;
  }
  return s;
}

}  // namespace

double bubble_value(int n, const BubbleParams& p, const double* x) {
  const DimensionConstants& dc = dimension_constants(n);
  const double q = p.lambda / (1.0 + p.lambda * p.lambda * dist2(n, p.a.data(), x));
  return dc.u_coeff * std::pow(q, 0.5 * (n - 2));
}

double bubble_radial_deriv(int n, const BubbleParams& p, double rho) {
  const DimensionConstants& dc = dimension_constants(n);
  const double l = p.lambda;
  const double den = 1.0 + l * l * rho * rho;
  return -dc.u_coeff * (n - 2) * std::pow(l, 0.5 * (n - 2)) * l * l * rho *
         std::pow(den, -0.5 * n);
}

namespace {

void require_centered(const Grid& g, const BubbleParams& p) {
  if (g.mode != GridMode::radial) return;
  for (int i = 0; i < g.n; ++i)
    if (std::abs(p.a[i]) > 1e-14)
      throw SolverAbort("radial grids require a centered bubble");
}

}  // namespace

Vec bubble_field(const Grid& g, const BubbleParams& p) {
  require_centered(g, p);
  Vec u(g.size());
  if (g.mode == GridMode::radial) {
    std::array<double, kMaxN> x{};
    for (std::size_t i = 0; i < g.size(); ++i) {
      x[0] = g.r[i];
      u[i] = bubble_value(g.n, p, x.data());
    }
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) u[i] = bubble_value(g.n, p, &g.xy[i * g.n]);
  }
  return u;
}

ProjectedBubble projected_bubble(const Grid& g, const Operators& op, const BubbleParams& p) {
  require_centered(g, p);
  ProjectedBubble pb;
  const auto bval = [&](const double* x) { return bubble_value(g.n, p, x); };
  pb.h = harmonic_extension(op, bval).solution;
  Vec u = bubble_field(g, p);
  pb.pu.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) pb.pu[i] = u[i] - pb.h[i];
  return pb;
}

Vec green_regular_field(const Grid& g, const Operators& op, const double* a) {
  const DimensionConstants& dc = dimension_constants(g.n);
  const int n = g.n;
  if (g.mode == GridMode::radial)
    for (int i = 0; i < n; ++i)
      if (std::abs(a[i]) > 1e-14)
        throw SolverAbort("radial grids require a centered Green pole");
  const auto bval = [&](const double* x) {
    return dc.u_coeff * std::pow(dist2(n, a, x), -0.5 * (n - 2));
  };
  return harmonic_extension(op, bval).solution;
}

double green_regular_at_center(const Grid& g, const Operators& op, const double* a) {
  const Vec H = green_regular_field(g, op, a);
  const double v = interp(g, H, a);
  if (!std::isfinite(v)) throw SolverAbort("green_regular_at_center: center off the grid");
  return v;
}

double ball_green_regular(int n, double R, const double* a, const double* x) {
  const DimensionConstants& dc = dimension_constants(n);
  double na2 = 0.0;
  for (int i = 0; i < n; ++i) na2 += a[i] * a[i];
  if (na2 < 1e-28) return dc.u_coeff * std::pow(R, 2 - n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = x[i] - R * R * a[i] / na2;
    s += d * d;
  }
  return dc.u_coeff * std::pow(std::sqrt(na2 * s) / R, 2.0 - n);
}

KernelBasis kernel_fields(const Grid& g, const Operators& op, const BubbleParams& p,
                          double r_infty) {
  require_centered(g, p);
  const int n = g.n;
  const double scale = std::pow(r_infty, -0.25 * (n - 2));
  const double l = p.lambda;
  KernelBasis kb;

  const ProjectedBubble pb = projected_bubble(g, op, p);
  kb.x0.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) kb.x0[i] = scale * pb.pu[i];

  // Dilation field lambda d/dlambda U and its boundary correction.
  const auto dil = [&](double rho2) {
    return 0.5 * (n - 2) * (1.0 - l * l * rho2) / (1.0 + l * l * rho2);
  };
  Vec du(g.size());
  if (g.mode == GridMode::radial) {
    std::array<double, kMaxN> x{};
    for (std::size_t i = 0; i < g.size(); ++i) {
      x[0] = g.r[i];
      du[i] = bubble_value(n, p, x.data()) * dil(g.r[i] * g.r[i]);
    }
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double rho2 = dist2(n, p.a.data(), &g.xy[i * n]);
      du[i] = bubble_value(n, p, &g.xy[i * n]) * dil(rho2);
    }
  }
  const auto dil_bval = [&](const double* x) {
    return bubble_value(n, p, x) * dil(dist2(n, p.a.data(), x));
  };
  const Vec hs = harmonic_extension(op, dil_bval).solution;
  kb.xs.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) kb.xs[i] = scale * (du[i] - hs[i]);

  if (g.mode == GridMode::radial) {
    // l = 1 translation profile: lambda^{-1} (-U'(r) - q(r)) with q harmonic
    // in the l = 1 operator and matching the trace at the ends.
    kb.radial_l1 = true;
    const double outer = -bubble_radial_deriv(n, p, g.dom.radius) / l;
    double inner_bv = 0.0;
    if (g.dom.kind == DomainKind::annulus)
      inner_bv = -bubble_radial_deriv(n, p, g.dom.inner) / l;
    const Vec q = solve_radial_l1(op, outer, inner_bv).solution;
    Vec t(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
      t[i] = scale * (-bubble_radial_deriv(n, p, g.r[i]) / l - q[i]);
    kb.xt.push_back(std::move(t));
  } else {
    for (int j = 0; j < n; ++j) {
      const auto tval = [&](const double* x) {
        const double rho2 = dist2(n, p.a.data(), x);
        return (n - 2) * bubble_value(n, p, x) * l * (x[j] - p.a[j]) / (1.0 + l * l * rho2);
      };
      Vec tj(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) tj[i] = tval(&g.xy[i * n]);
      const Vec hj = harmonic_extension(op, tval).solution;
      for (std::size_t i = 0; i < g.size(); ++i) tj[i] = scale * (tj[i] - hj[i]);
      kb.xt.push_back(std::move(tj));
    }
  }
  return kb;
}

void check_resolution(const Grid& g, const BubbleParams& p) {
  const int n = g.n;
  std::array<double, kMaxN> y = p.a;
  double na = 0.0;
  for (int i = 0; i < n; ++i) na += p.a[i] * p.a[i];
  na = std::sqrt(na);
  const double core = 1.0 / p.lambda;
  if (na > 1e-14) {
    for (int i = 0; i < n; ++i) y[i] += core * p.a[i] / na;
  } else {
    y[0] += core;
  }
  const double hloc = g.local_spacing(y.data());
  if (p.lambda * hloc > 0.5)
    throw ResolutionGuardError("bubble core under-resolved: lambda * h = " +
                               std::to_string(p.lambda * hloc));
}

// ---------------------------------------------------------------------------
// Dimension constants

namespace {

// J(s, q) = int_0^inf r^{s-1} (1+r^2)^{-q} dr via r = tan(theta).
double bubble_tail_integral(double s, double q) {
  const auto f = [s, q](double th) {
    return std::pow(std::sin(th), s - 1.0) * std::pow(std::cos(th), 2.0 * q - s - 1.0);
  };
  return adaptive_quadrature(f, 0.0, 1.57079632679489661923132169163975144, 1e-13, nullptr);
}

DimensionConstants compute_constants(int n) {
  DimensionConstants c;
  c.n = n;
  c.p = double(n + 2) / double(n - 2);
  c.m = double(n - 2) / double(n + 2);
  const double nn2 = double(n) * double(n - 2);
  c.u_coeff = std::pow(nn2, 0.25 * (n - 2));
  c.sphere = sphere_area(n, 1.0);
  const double jnn = bubble_tail_integral(n, n);
  c.sobolev = std::pow(std::pow(nn2, 0.5 * n) * c.sphere * jnn, 2.0 / n);
  c.poho_c2 = (n - 2) * std::pow(nn2, 0.25 * (n + 2)) * c.sphere * bubble_tail_integral(n, 0.5 * (n + 2));
  const double kmh = std::pow(c.sobolev, -0.5 * n);  // K^{-n/2}
  c.kappa_t = kmh * (n - 2) * (n - 2) / n * std::pow(nn2, 0.5 * n) * c.sphere *
              bubble_tail_integral(n + 2, n + 2);
  const double id = bubble_tail_integral(n, n + 2) - 2.0 * bubble_tail_integral(n + 2, n + 2) +
                    bubble_tail_integral(n + 4, n + 2);
  c.kappa_s = kmh * 0.25 * (n - 2) * (n - 2) * std::pow(nn2, 0.5 * n) * c.sphere * id;
  c.rate_cbar = 0.5 * c.poho_c2 * std::pow(c.sobolev, -0.5 * (n - 2));
  c.rate_c3 = (n - 2) * c.rate_cbar / ((n + 2) * c.kappa_s);
  c.rate_c3_alt = (n + 2) * c.rate_cbar / ((n - 2) * c.kappa_s);
  c.delta_exp = std::min(1.0, 4.0 / (n - 2));
  return c;
}

}  // namespace

const DimensionConstants& dimension_constants(int n) {
  static const DimensionConstants c3 = compute_constants(3);
  static const DimensionConstants c4 = compute_constants(4);
  static const DimensionConstants c5 = compute_constants(5);
  switch (n) {
    case 3: return c3;
    case 4: return c4;
    case 5: return c5;
  }
  throw ConfigError("dimension must be 3, 4, or 5");
}

}  // namespace ylab

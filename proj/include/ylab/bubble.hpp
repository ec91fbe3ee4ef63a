// Aubin-Talenti bubbles, their Dirichlet projections, approximate-kernel
// fields, and the dimension constants entering the rate laws.
#pragma once

#include <array>

#include "ylab/elliptic.hpp"
#include "ylab/geometry.hpp"

namespace ylab {

struct BubbleParams {
  std::array<double, kMaxN> a{};  // center
  double lambda = 1.0;            // concentration scale
};

// U_{a,lambda}(x) = [n(n-2)]^{(n-2)/4} (lambda / (1 + lambda^2 |x-a|^2))^{(n-2)/2}
double bubble_value(int n, const BubbleParams& p, const double* x);
double bubble_radial_deriv(int n, const BubbleParams& p, double rho);  // dU/drho

// Nodal bubble field. Radial grids require the center at the origin.
Vec bubble_field(const Grid& g, const BubbleParams& p);

// PU = U - h with h the discrete harmonic extension of the boundary trace.
struct ProjectedBubble {
  Vec pu;
  Vec h;
};
ProjectedBubble projected_bubble(const Grid& g, const Operators& op, const BubbleParams& p);

// Regular part of the bubble-normalized Green function: the harmonic field
// with boundary data c_n |x - a|^{2-n}.
Vec green_regular_field(const Grid& g, const Operators& op, const double* a);
double green_regular_at_center(const Grid& g, const Operators& op, const double* a);
// Closed-form image-charge value on a centered ball, for cross-checks.
double ball_green_regular(int n, double R, const double* a, const double* x);

// Approximate kernel of the linearized flow at a projected bubble, in the
// normalization that makes the bubble direction unit size in the
// u^{p-1}-weighted product. Radial grids store the translation l = 1 profile
// in xt[0]; cartesian grids store one field per coordinate.
struct KernelBasis {
  Vec x0;               // bubble direction
  std::vector<Vec> xt;  // translations
  Vec xs;               // dilation
  bool radial_l1 = false;
};
KernelBasis kernel_fields(const Grid& g, const Operators& op, const BubbleParams& p,
                          double r_infty);

// Throws ResolutionGuardError when the mesh cannot resolve the bubble core.
void check_resolution(const Grid& g, const BubbleParams& p);

struct DimensionConstants {
  int n = 0;
  double p = 0.0;        // (n+2)/(n-2)
  double m = 0.0;        // (n-2)/(n+2)
  double u_coeff = 0.0;  // [n(n-2)]^{(n-2)/4}
  double sphere = 0.0;   // |S^{n-1}|
  double sobolev = 0.0;  // bubble Yamabe energy, the one-bubble limit of r
  double poho_c2 = 0.0;  // Pohozaev flux coefficient
  double rate_cbar = 0.0;
  double rate_c3 = 0.0;      // dilation rate coefficient, kernel-projected
  double rate_c3_alt = 0.0;  // alternate convention kept for reporting
  double kappa_t = 0.0;      // translation Gram weight
  double kappa_s = 0.0;      // dilation Gram weight
  double delta_exp = 0.0;    // min(1, 4/(n-2))
};

// Computed once per dimension by adaptive quadrature of the defining
// integrals; tests pin these against Gamma-function closed forms.
const DimensionConstants& dimension_constants(int n);

}  // namespace ylab

// Discrete Laplacians and solvers: P1 radial stiffness (tridiagonal, Thomas),
// cut-cell Cartesian stiffness (matrix-free, Jacobi-PCG).
#pragma once

#include <functional>
#include <string>

#include "ylab/geometry.hpp"

namespace ylab {

struct Operators {
  const Grid* g = nullptr;
  // Radial tridiagonal stiffness: kd diagonal, kl sub/super diagonal.
  Vec kd, kl;
  // Diagonal addition (n-1) w_i / r_i^2 turning K into the l = 1 operator.
  Vec l1_extra;
  // Cartesian stiffness: full links carry -link_coef off-diagonal, cut links
  // fold into the diagonal as link_coef / theta. SPD by construction.
  Vec cdiag;
  double link_coef = 0.0;  // h^{n-2}
  // Iterative-solver policy for cartesian grids (radial solves are direct).
  double pcg_tol = 1e-10;
  int pcg_maxit = 50000;
};

Operators build_operators(const Grid& g);

// Full stiffness action K u (all rows). For cartesian grids the cut diagonal
// terms assume a homogeneous Dirichlet trace.
void apply_K(const Operators& op, const Vec& u, Vec& out);

// Dirichlet energy u^T K u; exact for radial P1 fields with any trace, for
// cartesian fields only when the trace vanishes.
double energy(const Operators& op, const Vec& u);

struct EllipticSolveReport {
  Vec solution;
  double residual_linf = 0.0;
  int iterations = 0;
  std::string solver;
};

// Solve K u = M f with homogeneous Dirichlet data (f is a nodal density).
EllipticSolveReport solve_poisson(const Operators& op, const Vec& f);

// Solve K h = 0 with trace bval on the Dirichlet boundary.
EllipticSolveReport harmonic_extension(const Operators& op,
                                       const std::function<double(const double*)>& bval);

// Radial l = 1 profile solve: (K + l1_extra) q = 0 with q = outer_value at
// r = R and q = inner_value at the inner end (r = 0 for balls).
EllipticSolveReport solve_radial_l1(const Operators& op, double outer_value,
                                    double inner_value = 0.0);

// Thomas elimination for tridiagonal systems; d, l consumed as scratch.
void thomas_solve(Vec d, Vec l, Vec& b);

struct PcgResult {
  int iterations = 0;
  double residual = 0.0;
};

// Jacobi-preconditioned CG for SPD operators, relative L2 tolerance.
PcgResult pcg(const std::function<void(const Vec&, Vec&)>& apply, const Vec& diag, const Vec& b,
              Vec& x, double tol, int maxit);

}  // namespace ylab

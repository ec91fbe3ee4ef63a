// Domains (ball, annulus, box in n = 3..5), graded radial and masked Cartesian
// grids, volume/surface quadrature, and binary grid checkpoints.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ylab/util.hpp"

namespace ylab {

inline constexpr int kMaxN = 5;

double sphere_area(int n, double radius);  // area of the sphere |x| = radius in R^n
double unit_ball_volume(int n);

enum class DomainKind : std::uint64_t { ball = 0, annulus = 1, box = 2 };

struct Domain {
  DomainKind kind = DomainKind::ball;
  int n = 3;
  double radius = 1.0;  // ball / annulus outer radius
  double inner = 0.0;   // annulus inner radius
  std::array<double, kMaxN> lo{}, hi{};  // box corners

  bool contains(const double* x) const;
  // Signed distance to the boundary, positive inside.
  double boundary_distance(const double* x) const;
  double inradius() const;
  double volume() const;
  double surface_area() const;
};

struct BoundaryQuad {
  std::vector<double> x;   // point coords, n-strided
  std::vector<double> nu;  // outward unit normals, n-strided
  std::vector<double> w;   // weights; sum = |boundary|
  std::size_t size() const { return w.size(); }
};

enum class GridMode : std::uint64_t { radial = 0, cartesian = 1 };

struct Grid {
  Domain dom;
  GridMode mode = GridMode::radial;
  int n = 3;

  // Radial payload: nodes r[0] < ... < r[N-1]; ball grids start at r = 0.
  std::vector<double> r;
  double gamma = 2.0;

  // Cartesian payload: lattice of cell centers origin + i*h, masked to dom.
  double h = 0.0;
  std::array<std::int64_t, kMaxN> dims{};
  std::array<double, kMaxN> origin{};
  std::vector<std::int64_t> lattice;  // lattice cell -> node id, or -1
  std::vector<double> xy;             // node coords, n-strided
  // Per node, 2n links ordered (-x1, +x1, -x2, +x2, ...): neighbor node id,
  // or -1 for a boundary link with intercept fraction theta in (0, 1].
  std::vector<std::int32_t> nbr;
  std::vector<double> theta;

  // Common payload.
  std::vector<double> wq;           // volume quadrature weights
  std::vector<std::uint8_t> interior;  // 1 = interior dof, 0 = Dirichlet node
  BoundaryQuad bq;

  std::size_t size() const { return wq.size(); }
  double local_spacing(const double* a) const;  // node spacing near point a
  std::int64_t lattice_id(const std::int64_t* idx) const;
};

struct GridSpec {
  GridMode mode = GridMode::radial;
  std::int64_t nr = 512;   // radial node count
  double gamma = 2.0;      // radial grading exponent (ball only)
  double h = 1.0 / 16;     // cartesian spacing
  int surf_order = 24;     // boundary quadrature order
};

Grid build_grid(const Domain& dom, const GridSpec& spec);

// Volume quadrature of nodal values: sum w_i f_i with deterministic pairwise
// reduction. integrate_pow applies |f|^q (integer q fast path) first.
double integrate(const Grid& g, const Vec& f);
double integrate_pow(const Grid& g, const Vec& f, double q);
Vec pow_field(const Vec& f, double q);

// Surface quadrature of a callable g(x, nu) over the boundary point set.
double surface_integrate(const Grid& g,
                         const std::function<double(const double* x, const double* nu)>& f);

// Outward normal derivative of a nodal field at each boundary quadrature
// point (second-order one-sided stencils along the normal).
Vec boundary_normal_derivative(const Grid& g, const Vec& f);

// Pointwise evaluation of a nodal field (cubic in r for radial grids,
// multilinear for cartesian). Returns NaN if the stencil leaves the grid.
double interp(const Grid& g, const Vec& f, const double* x);

void save_grid(const Grid& g, const std::string& path);
Grid load_grid(const std::string& path);

}  // namespace ylab

// Normalized curvature flow and the physical fast-diffusion flow. Both use
// backward Euler with damped Newton solves; the normalized flow renormalizes
// volume every step so the discrete invariants hold by construction.
#pragma once

#include <cstdint>
#include <string>

#include "ylab/bubble.hpp"
#include "ylab/elliptic.hpp"
#include "ylab/geometry.hpp"

namespace ylab {

struct FlowOptions {
  double dt_init = 1e-4;
  double dt_min = 1e-7;
  double dt_max = 0.1;
  double rel_target = 1e-3;  // per-step relative change of the controlled scalar
  double growth = 1.05;      // dt growth cap, keeps centered differences clean
  double r_dt_cap = 0.12;    // dt <= r_dt_cap / r bounds the renormalization bias
  int max_newton = 60;
  double newton_tol = 1e-12;
  int max_rejects = 12;
};

struct FlowState {
  Vec u;
  double s = 0.0;   // flow time
  double t = 0.0;   // accumulated inner time, trapezoid of r ds
  double dt = 0.0;  // next proposed step
  double r = 0.0;   // u^T K u
  double vol = 0.0; // recorded volume of the state (1 up to roundoff)
  double m2 = 0.0;  // second curvature moment
  std::int64_t step = 0;
};

struct StepInfo {
  int newton_iters = 0;
  int rejects = 0;
  double dt_used = 0.0;
  double vol_drift_pre = 0.0;  // |vol - 1| before renormalization
};

struct EnergySummary {
  double r = 0.0;
  double vol = 0.0;
  double m2 = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  double yamabe = 0.0;  // r / vol^{(n-2)/n}
  double fmono = 0.0;   // (2/n) r^{n/2}
};

// Normalize u0 to unit volume, zero it on Dirichlet nodes, fill summaries.
void init_flow_state(const Grid& g, const Operators& op, FlowState& st, const Vec& u0,
                     const FlowOptions& opt);

StepInfo step_yamabe(const Grid& g, const Operators& op, FlowState& st, const FlowOptions& opt);

EnergySummary energy_functionals(const Grid& g, const Operators& op, const Vec& u);

// Nodal curvature (Ku)_i / (w_i u_i^p) on interior nodes; r elsewhere.
Vec scalar_curvature(const Grid& g, const Operators& op, const Vec& u);

// M_q = sum_i w_i u_i^{p+1} |R_i - r|^q over interior nodes. For q = 2 the
// semi-discrete identity dr/ds = -2(n-2)/(n+2) M_2 is exact.
double curvature_moment(const Grid& g, const Operators& op, const Vec& u, double q);

// ---------------------------------------------------------------------------
// Physical flow d(rho)/dtau = Lap(rho^m), advanced in q = rho^m.

struct PhysicalState {
  Vec rho;
  double tau = 0.0;
  double dt = 0.0;
  double mass_p = 0.0;  // int rho^{2n/(n+2)} = int q^{p+1}
  std::int64_t step = 0;
};

void init_physical_state(const Grid& g, PhysicalState& st, const Vec& rho0,
                         const FlowOptions& opt);

StepInfo step_physical(const Grid& g, const Operators& op, PhysicalState& st,
                       const FlowOptions& opt);

struct ExtinctionReport {
  double t_star = 0.0;
  double slope = 0.0;      // of the affine law in G = mass_p^{2/n}
  double intercept = 0.0;
  double fit_rms = 0.0;    // affine fit residual relative to G(0)
  double window_gap = 0.0; // |T*_prev - T*_last| / T*_last across windows
  bool monotone = false;
  int samples = 0;
};

// Affine extrapolation of G(tau) = mass_p^{2/n} from the trailing samples.
ExtinctionReport estimate_extinction(const std::vector<double>& tau,
                                     const std::vector<double>& mass_p, int n);

// Rescaling maps between the physical and normalized descriptions.
double rescaled_time(int n, double t_star, double tau);
Vec physical_to_rescaled(const Grid& g, const Vec& rho, double sigma);  // sigma = T* - tau
Vec rho_from_unit(const Grid& g, const Vec& u, double t_star);          // inverse at tau = 0

// Initial data presets: "dome", "bubble", "perturbed-bubble". Unnormalized.
Vec preset_initial(const Grid& g, const Operators& op, const std::string& name, double lambda0,
                   double eps);

}  // namespace ylab

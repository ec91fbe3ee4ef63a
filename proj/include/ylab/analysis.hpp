// Single-bubble fits, kernel decompositions, Pohozaev flux checks, and the
// rate-law and dichotomy reports built from run time series.
#pragma once

#include <string>
#include <vector>

#include "ylab/bubble.hpp"
#include "ylab/elliptic.hpp"
#include "ylab/geometry.hpp"

namespace ylab {

struct FitOptions {
  double delta0 = 0.0;  // boundary collar; centers keep distance >= delta0/2
  int max_iter = 40;
  double tol = 1e-11;
};

struct BubbleFit {
  BubbleParams params;
  double alpha = 0.0;
  double eta_l2 = 0.0;  // weighted L2 norm of u - alpha PU (weight u^{p-1})
  int iterations = 0;
  bool converged = false;
};

// Least-squares single-bubble fit by Gauss-Newton in log(lambda) (and the
// center on cartesian grids), with the amplitude eliminated exactly.
BubbleFit fit_bubble(const Grid& g, const Operators& op, const Vec& u, const FitOptions& opt,
                     const BubbleFit* warm);

struct DecompositionReport {
  BubbleFit fit;
  Vec b;                    // -<(R-r)u, X_j>_w: bubble, translations, dilation
  double eta_w = 0.0;       // weighted norm of the kernel-orthogonal remainder
  double w_h1 = 0.0;        // H1 seminorm of u - alpha PU
  double ortho_defect = 0.0;
  double closeness = 0.0;   // sup_i |u_i / x0_i - 1| over interior nodes
  double kappa0 = 0.0, kappa_t = 0.0, kappa_s = 0.0;
  double pohozaev_lhs = 0.0, pohozaev_pred = 0.0;
};

// Project the fit residual onto the approximate kernel in the u^{p-1}
// weighted product. h_center < 0 recomputes the Green regular part.
DecompositionReport decompose(const Grid& g, const Operators& op, const Vec& u,
                              const BubbleFit& fit, double h_center);

struct PohozaevCheck {
  double lhs = 0.0;   // int ((x-a).nu) (d_nu PU)^2 over the boundary
  double pred = 0.0;  // C2 H(a,a) lambda^{2-n}
  double ratio = 0.0;
};

PohozaevCheck pohozaev_bubble_check(const Grid& g, const Operators& op, const BubbleParams& bp);

struct RateSample {
  double s = 0.0;
  double lambda = 0.0;
  double m2 = 0.0;
  double b0 = 0.0;
  double r = 0.0;
};

struct RateReport {
  double m2_slope = 0.0;          // dlog M2 / dlog lambda
  double plateau_mean = 0.0;      // lamdot lambda^{n-3} / (C3 H)
  double plateau_dev = 0.0;       // rms relative deviation from the mean
  double plateau_mean_alt = 0.0;  // same against the alternate C3 convention
  double b0_ratio_first = 0.0;    // |b0| / sqrt(M2), head of the window
  double b0_ratio_last = 0.0;     // and tail
  double r_gap_slope = 0.0;       // dlog (r - K) / dlog lambda
  int samples = 0;
};

RateReport rate_report(const std::vector<RateSample>& samples, int n, double h_center);

enum class FlowOutcome { bubble_concentration, steady_state, undetermined };

struct DichotomyReport {
  FlowOutcome outcome = FlowOutcome::undetermined;
  std::string evidence;
  double lambda_final = 0.0;
  double m2_final = 0.0;
};

DichotomyReport classify_dichotomy(const std::vector<RateSample>& samples, double lambda_stop,
                                   double m2_tol);

// Nonuniform centered 3-point derivative of y(x) at interior sample indices.
std::vector<double> centered_derivative(const std::vector<double>& x,
                                        const std::vector<double>& y);

}  // namespace ylab

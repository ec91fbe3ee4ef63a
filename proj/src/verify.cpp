// Verification suites behind `ylab verify` and the acceptance gate.
#include "ylab/verify.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "ylab/analysis.hpp"
#include "ylab/bubble.hpp"
#include "ylab/config.hpp"
#include "ylab/elliptic.hpp"
#include "ylab/flow.hpp"
#include "ylab/geometry.hpp"
#include "ylab/runner.hpp"
#include "ylab/util.hpp"

namespace ylab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string bound_text(double lo, double hi) {
  if (lo == -kInf) return "<= " + fmt_g17(hi);
  if (hi == kInf) return ">= " + fmt_g17(lo);
  return "in [" + fmt_g17(lo) + ", " + fmt_g17(hi) + "]";
}

// Appends a check, prints its line, returns pass.
bool check(VerifySuite& suite, std::ostream& log, const std::string& tag,
           const std::string& name, double measured, double lo, double hi,
           const std::string& note = "") {
  VerifyCheck c;
  c.name = suite.name + "/" + name;
  c.tag = tag;
  c.measured = measured;
  c.lo = lo;
  c.hi = hi;
  c.pass = measured >= lo && measured <= hi;  // NaN fails both
  c.note = note;
  log << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.name << ": " << fmt_g17(measured)
      << " (" << bound_text(lo, hi) << ")";
  if (!note.empty()) log << "  " << note;
  log << "\n";
  suite.checks.push_back(std::move(c));
  return suite.checks.back().pass;
}

// ---------------------------------------------------------------------------
// Shared ball blow-up run, computed once per process and reused by the
// flow-invariants and rates-ball suites.

struct SharedBallRun {
  RunConfig cfg;
  Workspace ws;
  RunResult rr;
};

const SharedBallRun& shared_ball_run() {
  static SharedBallRun* cache = [] {
    auto* p = new SharedBallRun;
    p->cfg = preset_config("ball-blowup-n3-radial");
    p->cfg.out_dir.clear();
    make_workspace(p->cfg, p->ws);
    const Vec u0 = initial_field(p->ws.grid, p->ws.op, p->cfg);
    p->rr = run_normalized(p->ws.grid, p->ws.op, p->cfg, u0);
    return p;
  }();
  return *cache;
}

// ---------------------------------------------------------------------------
// Suites

VerifySuite suite_constants(std::ostream& log) {
  VerifySuite s{"constants", {}, 0.0};
  const double t0 = now_s();
  const DimensionConstants& dc = dimension_constants(3);

  const double k_exact = 3.0 * std::pow(0.5 * kPi, 4.0 / 3.0);
  check(s, log, "A1", "K3_rel_err", std::abs(dc.sobolev / k_exact - 1.0), -kInf, 1e-6,
        "K(3) vs 3 (pi/2)^{4/3}");
  const double c2_exact = 4.0 * kPi * std::pow(3.0, 0.25);
  check(s, log, "A1", "C2_rel_err", std::abs(dc.poho_c2 / c2_exact - 1.0), -kInf, 1e-6,
        "C2(3) vs 4 pi 3^{1/4}");

  // Discrete isotropy: the three translation Gram weights on a centered
  // cartesian ball grid agree by lattice permutation symmetry.
  Domain dom;
  dom.kind = DomainKind::ball;
  dom.n = 3;
  dom.radius = 1.0;
  GridSpec gs;
  gs.mode = GridMode::cartesian;
  gs.h = 0.125;
  const Grid g = build_grid(dom, gs);
  const Operators op = build_operators(g);
  BubbleParams bp;
  bp.lambda = 2.0;
  const ProjectedBubble pb = projected_bubble(g, op, bp);
  const KernelBasis kb = kernel_fields(g, op, bp, dc.sobolev);
  std::array<double, 3> kap{};
  for (int j = 0; j < 3; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double w = pb.pu[i] * pb.pu[i];
      acc += g.wq[i] * w * w * kb.xt[j][i] * kb.xt[j][i];
    }
    kap[j] = acc;
  }
  double iso = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      iso = std::max(iso, std::abs(kap[a] / kap[b] - 1.0));
  check(s, log, "A1", "kappa_discrete_iso", iso, -kInf, 1e-8,
        "pairwise gap of the three discrete translation weights");
  check(s, log, "A1", "kappa_quadrature_gap", std::abs(dc.kappa_t - dc.kappa_s), -kInf, 1e-8,
        "kappa_t vs kappa_s, both 1/16 for n = 3");

  s.seconds = now_s() - t0;
  check(s, log, "A1", "runtime_s", s.seconds, -kInf, 5.0);
  return s;
}

VerifySuite suite_elliptic(std::ostream& log) {
  VerifySuite s{"elliptic", {}, 0.0};
  const double t0 = now_s();

  Domain dom;
  dom.kind = DomainKind::ball;
  dom.n = 3;
  dom.radius = 1.0;
  GridSpec gs;
  gs.mode = GridMode::radial;
  gs.nr = 2048;
  gs.gamma = 2.0;
  const Grid g = build_grid(dom, gs);
  const Operators op = build_operators(g);

  std::array<double, kMaxN> a{};
  const Vec hreg = green_regular_field(g, op, a.data());
  const std::vector<double> lambdas{4.0, 8.0, 16.0, 32.0};
  std::vector<double> lx, ly;
  std::string note = "sup gaps:";
  for (const double lam : lambdas) {
    BubbleParams bp;
    bp.lambda = lam;
    const ProjectedBubble pb = projected_bubble(g, op, bp);
    const double pref = std::pow(lam, -0.5 * (g.n - 2));
    double sup = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      sup = std::max(sup, std::abs(pb.h[i] - pref * hreg[i]));
    lx.push_back(std::log(lam));
    ly.push_back(std::log(sup));
    note += " " + fmt_g17(sup);
  }
  const LineFit lf = fit_line(lx, ly);
  check(s, log, "A2", "h_decay_slope", lf.slope, -2.8, -2.2, note);

  s.seconds = now_s() - t0;
  check(s, log, "A2", "runtime_s", s.seconds, -kInf, 60.0);
  return s;
}

VerifySuite suite_bubble(std::ostream& log) {
  VerifySuite s{"bubble", {}, 0.0};
  const double t0 = now_s();

  Domain dom;
  dom.kind = DomainKind::ball;
  dom.n = 3;
  dom.radius = 1.0;
  GridSpec gs;
  gs.mode = GridMode::radial;
  gs.nr = 2048;
  gs.gamma = 2.0;
  const Grid g = build_grid(dom, gs);
  const Operators op = build_operators(g);

  const std::vector<double> lambdas{8.0, 16.0, 32.0};
  std::vector<double> dev;
  std::string note = "|ratio - 1|:";
  for (const double lam : lambdas) {
    BubbleParams bp;
    bp.lambda = lam;
    const PohozaevCheck pc = pohozaev_bubble_check(g, op, bp);
    dev.push_back(std::abs(pc.ratio - 1.0));
    note += " " + fmt_g17(dev.back());
  }
  check(s, log, "A3", "poho_dev_lambda32", dev.back(), -kInf, 0.10, note);
  const double worst_step = std::max(dev[1] - dev[0], dev[2] - dev[1]);
  check(s, log, "A3", "poho_dev_decreasing", worst_step, -kInf, 0.0,
        "largest forward difference of the deviations; negative = decreasing");

  s.seconds = now_s() - t0;
  check(s, log, "A3", "runtime_s", s.seconds, -kInf, 60.0);
  return s;
}

VerifySuite suite_flow_invariants(std::ostream& log) {
  VerifySuite s{"flow-invariants", {}, 0.0};
  const double t0 = now_s();
  const SharedBallRun& run = shared_ball_run();
  const StepSeries& ts = run.rr.series;
  const std::size_t N = ts.s.size();

  double vmax = 0.0;
  for (std::size_t k = 1; k < N; ++k) vmax = std::max(vmax, ts.vol_err[k]);
  check(s, log, "A4", "vol_drift_max", vmax, -kInf, 1e-10,
        "post-renormalization, " + std::to_string(N - 1) + " steps");

  double rinc = -kInf;
  for (std::size_t k = 1; k < N; ++k) rinc = std::max(rinc, ts.r[k] - ts.r[k - 1]);
  check(s, log, "A4", "r_increase_max", rinc, -kInf, 1e-9,
        "largest per-step increase of r (monotone when <= 0)");

  const std::vector<double> rdot = centered_derivative(ts.s, ts.r);
  const double coef = -2.0 * (run.ws.grid.n - 2.0) / (run.ws.grid.n + 2.0);
  double worst = 0.0;
  for (std::size_t k = N / 4; k <= 3 * N / 4 && k + 1 < N; ++k) {
    if (k == 0) continue;
    const double pred = coef * ts.m2[k];
    worst = std::max(worst, std::abs(rdot[k] / pred - 1.0));
  }
  check(s, log, "A4", "rdot_identity_relerr", worst, -kInf, 0.05,
        "dr/ds vs -(2(n-2)/(n+2)) M2, middle half of the run");

  s.seconds = now_s() - t0;
  check(s, log, "A4", "runtime_s", s.seconds, -kInf, 300.0);
  return s;
}

VerifySuite suite_rates_ball(std::ostream& log) {
  VerifySuite s{"rates-ball", {}, 0.0};
  const double t0 = now_s();
  const SharedBallRun& run = shared_ball_run();

  double lam_max = 0.0;
  for (const auto& smp : run.rr.rate) lam_max = std::max(lam_max, smp.lambda);
  std::vector<RateSample> window;
  for (const auto& smp : run.rr.rate)
    if (smp.lambda >= 0.1 * lam_max) window.push_back(smp);
  std::array<double, kMaxN> a0{};
  const double hc = ball_green_regular(3, run.cfg.dom.radius, a0.data(), a0.data());
  const RateReport rep = rate_report(window, 3, hc);

  check(s, log, "A5", "m2_slope", rep.m2_slope, -2.5, -1.5,
        "dlog M2 / dlog lambda over the last decade, " + std::to_string(rep.samples) +
            " samples");
  check(s, log, "A5", "lamdot_plateau", rep.plateau_mean, 0.7, 1.3,
        "lambda-dot / (C3 H), rel dev " + fmt_g17(rep.plateau_dev));
  const double contraction =
      rep.b0_ratio_first / std::max(rep.b0_ratio_last, 1e-300);
  check(s, log, "A5", "b0_contraction", contraction, 3.0, kInf,
        "|b0|/sqrt(M2) head over tail of the window");

  const std::vector<FitRecord>& fits = run.rr.fits;
  std::vector<double> ratio;
  for (const auto& fr : fits) {
    const double norm = std::pow(std::max(fr.m2, 0.0), 0.4) +
                        std::pow(fr.fit.params.lambda, -0.4);
    ratio.push_back(fr.dec.closeness / norm);
  }
  const double med = median(ratio);
  const double rmax = *std::max_element(ratio.begin(), ratio.end());
  check(s, log, "A6", "closeness_stability", rmax / med, -kInf, 3.0,
        "max over median of closeness / (M2^{2/5} + lambda^{-2/5}), " +
            std::to_string(ratio.size()) + " fits");

  const StepSeries& ts = run.rr.series;
  const std::size_t N = ts.s.size();
  check(s, log, "A9", "u8_growth", ts.u8.back() / ts.u8.front(), 5.0, kInf,
        "int u^8, final over initial");
  double drop = 0.0;
  for (std::size_t k = 1; k < N; ++k)
    drop = std::max(drop, (ts.u8[k - 1] - ts.u8[k]) / ts.u8[k - 1]);
  check(s, log, "A9", "u8_monotone_drop", drop, -kInf, 1e-9,
        "largest relative decrease of int u^8 per step");
  double vmax = 0.0;
  for (std::size_t k = 0; k < N; ++k) vmax = std::max(vmax, ts.vol_err[k]);
  check(s, log, "A9", "l6_volume_drift", vmax, -kInf, 1e-10,
        "|int u^6 - 1|; bounds the L6 norm gap from 1");

  s.seconds = now_s() - t0;
  check(s, log, "A5", "runtime_s", s.seconds, -kInf, 900.0);
  return s;
}

VerifySuite suite_steady_annulus(std::ostream& log) {
  VerifySuite s{"steady-annulus", {}, 0.0};
  const double t0 = now_s();

  RunConfig cfg = preset_config("annulus-steady-n3-radial");
  cfg.out_dir.clear();
  Workspace ws;
  make_workspace(cfg, ws);
  const Vec u0 = initial_field(ws.grid, ws.op, cfg);
  const RunResult rr = run_normalized(ws.grid, ws.op, cfg, u0);

  check(s, log, "A7", "outcome_steady",
        rr.classification.outcome == FlowOutcome::steady_state ? 1.0 : 0.0, 1.0, 1.0,
        rr.classification.evidence);
  check(s, log, "A7", "m2_final", rr.state.m2, -kInf, 1e-8);
  const double margin = rr.state.r - dimension_constants(3).sobolev;
  check(s, log, "A7", "r_margin_over_K", margin, 1e-6, kInf,
        "final r minus the one-bubble energy K(3)");

  double tail = std::numeric_limits<double>::quiet_NaN();
  if (rr.snapshots.size() >= 2) {
    const Vec& mid = rr.snapshots[0].field;
    const Vec& end = rr.snapshots[1].field;
    tail = 0.0;
    for (std::size_t i = 0; i < end.size(); ++i) {
      if (!ws.grid.interior[i]) continue;
      tail = std::max(tail, std::abs(end[i] / mid[i] - 1.0));
    }
  }
  check(s, log, "A7", "profile_tail_rel", tail, -kInf, 5e-2,
        "sup |u(s_end)/u(s_end/2) - 1| over interior nodes");

  s.seconds = now_s() - t0;
  check(s, log, "A7", "runtime_s", s.seconds, -kInf, 300.0);
  return s;
}

VerifySuite suite_roundtrip(std::ostream& log) {
  VerifySuite s{"roundtrip", {}, 0.0};
  const double t0 = now_s();
  const int n = 3;
  const DimensionConstants& dc = dimension_constants(n);

  RunConfig fine = preset_config("ball-extinction-n3-radial");
  fine.out_dir.clear();
  Workspace wf;
  make_workspace(fine, wf);

  // One shared initial profile: the unit-volume dome.
  Vec u0 = preset_initial(wf.grid, wf.op, "dome", fine.lambda0, 0.0);
  for (std::size_t i = 0; i < u0.size(); ++i)
    if (!wf.grid.interior[i]) u0[i] = 0.0;
  const double v0 = integrate_pow(wf.grid, u0, dc.p + 1.0);
  const double cnorm = std::pow(v0, -1.0 / (dc.p + 1.0));
  for (auto& x : u0) x *= cnorm;

  const Vec rho0 = rho_from_unit(wf.grid, u0, 1.0);
  const PhysicalRunResult pf = run_physical(wf.grid, wf.op, fine, rho0);

  RunConfig coarse = fine;
  coarse.grid.nr = 1024;
  coarse.snapshot_stride = 0;
  Workspace wc;
  make_workspace(coarse, wc);
  Vec u0c = preset_initial(wc.grid, wc.op, "dome", coarse.lambda0, 0.0);
  for (std::size_t i = 0; i < u0c.size(); ++i)
    if (!wc.grid.interior[i]) u0c[i] = 0.0;
  const double v0c = integrate_pow(wc.grid, u0c, dc.p + 1.0);
  const double ccn = std::pow(v0c, -1.0 / (dc.p + 1.0));
  for (auto& x : u0c) x *= ccn;
  const PhysicalRunResult pc = run_physical(wc.grid, wc.op, coarse, rho_from_unit(wc.grid, u0c, 1.0));

  const double tf = pf.extinction_valid ? pf.extinction.t_star
                                        : std::numeric_limits<double>::quiet_NaN();
  const double tc = pc.extinction_valid ? pc.extinction.t_star
                                        : std::numeric_limits<double>::quiet_NaN();
  check(s, log, "A8", "tstar_grid_rel", std::abs(tf - tc) / tf, -kInf, 0.02,
        "T* " + fmt_g17(tf) + " fine vs " + fmt_g17(tc) + " coarse");
  check(s, log, "A8", "tstar_window_gap",
        pf.extinction_valid ? pf.extinction.window_gap
                            : std::numeric_limits<double>::quiet_NaN(),
        -kInf, 0.01, "trailing-window stability of the fine T*");

  // Map each stored snapshot to its flow time s_k by the exact change of
  // variables, using the per-step mass series of the fine run.
  double profile_max = std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  if (pf.extinction_valid && !pf.snapshots.empty()) {
    const std::vector<double>& tau = pf.tau;
    const std::vector<double>& mp = pf.mass_p;
    const auto dsdtau = [&](std::size_t j) {
      const double sigma = tf - tau[j];
      const double nfac = std::pow((n + 2.0) / (4.0 * sigma), 0.25 * (n - 2.0)) *
                          std::pow(mp[j], 1.0 / (dc.p + 1.0));
      return std::pow(nfac, 1.0 - dc.p) * (n + 2.0) / (4.0 * sigma);
    };
    std::vector<double> scum(tau.size(), 0.0);
    for (std::size_t j = 1; j < tau.size(); ++j)
      scum[j] = scum[j - 1] + 0.5 * (tau[j] - tau[j - 1]) * (dsdtau(j - 1) + dsdtau(j));

    std::vector<std::size_t> keep;   // snapshot index
    std::vector<double> marks;       // matching s_k
    for (std::size_t k = 0; k < pf.snapshots.size(); ++k) {
      const double tk = pf.snapshots[k].at;
      if (tk < 0.1 * tf || tk > 0.7 * tf) continue;
      const auto it = std::lower_bound(tau.begin(), tau.end(), tk - 1e-15);
      const std::size_t j = static_cast<std::size_t>(it - tau.begin());
      if (j >= tau.size() || std::abs(tau[j] - tk) > 1e-12 * std::max(1.0, tk)) continue;
      keep.push_back(k);
      marks.push_back(scum[j]);
    }

    if (!keep.empty()) {
      RunConfig ucfg = fine;
      ucfg.flow_kind = "normalized";
      ucfg.fit_enable = false;
      ucfg.lambda_stop = 0.0;
      ucfg.snapshot_s = marks;
      ucfg.s_end = marks.back() + 1e-9;
      const RunResult ru = run_normalized(wf.grid, wf.op, ucfg, u0);

      if (ru.snapshots.size() == keep.size()) {
        profile_max = 0.0;
        used = keep.size();
        for (std::size_t k = 0; k < keep.size(); ++k) {
          const Snapshot& snap = pf.snapshots[keep[k]];
          Vec uhat = physical_to_rescaled(wf.grid, snap.field, tf - snap.at);
          const double nn = std::pow(integrate_pow(wf.grid, uhat, dc.p + 1.0),
                                     1.0 / (dc.p + 1.0));
          for (std::size_t i = 0; i < uhat.size(); ++i)
            uhat[i] = uhat[i] / nn - ru.snapshots[k].field[i];
          const double err =
              std::pow(integrate_pow(wf.grid, uhat, dc.p + 1.0), 1.0 / (dc.p + 1.0));
          profile_max = std::max(profile_max, err);
        }
      }
    }
  }
  check(s, log, "A8", "profile_l6_max", profile_max, -kInf, 0.02,
        "L6 gap between the remapped physical states and the direct flow, " +
            std::to_string(used) + " marks in [0.1, 0.7] T*");

  s.seconds = now_s() - t0;
  check(s, log, "A8", "runtime_s", s.seconds, -kInf, 600.0);
  return s;
}

}  // namespace

bool VerifySuite::passed() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::vector<std::string> verify_suite_names() {
  return {"constants",  "elliptic",       "bubble",   "flow-invariants",
          "rates-ball", "steady-annulus", "roundtrip"};
}

VerifySuite run_verify_suite(const std::string& name, std::ostream& log) {
  log << "suite " << name << ":\n";
  VerifySuite s;
  if (name == "constants") s = suite_constants(log);
  else if (name == "elliptic") s = suite_elliptic(log);
  else if (name == "bubble") s = suite_bubble(log);
  else if (name == "flow-invariants") s = suite_flow_invariants(log);
  else if (name == "rates-ball") s = suite_rates_ball(log);
  else if (name == "steady-annulus") s = suite_steady_annulus(log);
  else if (name == "roundtrip") s = suite_roundtrip(log);
  else throw ConfigError("unknown verify suite '" + name + "'");
  int failed = 0;
  for (const auto& c : s.checks)
    if (!c.pass) ++failed;
  log << "suite " << name << ": " << s.checks.size() << " checks, " << failed
      << " failed, " << fmt_g17(s.seconds) << " s\n";
  return s;
}

std::vector<VerifySuite> run_verify(const std::string& which, std::ostream& log) {
  std::vector<VerifySuite> out;
  if (which == "all") {
    for (const auto& name : verify_suite_names()) out.push_back(run_verify_suite(name, log));
  } else {
    out.push_back(run_verify_suite(which, log));
  }
  int checks = 0, failed = 0;
  for (const auto& s : out)
    for (const auto& c : s.checks) {
      ++checks;
      if (!c.pass) ++failed;
    }
  log << "verify: " << checks << " checks, " << failed << " failed\n";
  return out;
}

bool all_passed(const std::vector<VerifySuite>& suites) {
  for (const auto& s : suites)
    if (!s.passed()) return false;
  return true;
}

std::string verify_json(const std::vector<VerifySuite>& suites) {
  nlohmann::json js;
  js["pass"] = all_passed(suites);
  js["suites"] = nlohmann::json::array();
  for (const auto& s : suites) {
    nlohmann::json js_s{{"name", s.name}, {"seconds", s.seconds}, {"pass", s.passed()}};
    js_s["checks"] = nlohmann::json::array();
    for (const auto& c : s.checks) {
      nlohmann::json jc{{"name", c.name}, {"tag", c.tag}, {"pass", c.pass}, {"note", c.note}};
      jc["measured"] = std::isfinite(c.measured) ? nlohmann::json(c.measured)
                                                 : nlohmann::json(fmt_g17(c.measured));
      jc["lo"] = std::isfinite(c.lo) ? nlohmann::json(c.lo) : nlohmann::json();
      jc["hi"] = std::isfinite(c.hi) ? nlohmann::json(c.hi) : nlohmann::json();
      js_s["checks"].push_back(std::move(jc));
    }
    js["suites"].push_back(std::move(js_s));
  }
  return js.dump(2) + "\n";
}

std::vector<AcceptanceLine> acceptance_summary(const std::vector<VerifySuite>& suites) {
  const std::vector<std::pair<std::string, std::string>> lines{
      {"A1", "dimension constants and kernel isotropy"},
      {"A2", "harmonic extension scaling"},
      {"A3", "boundary flux identity"},
      {"A4", "flow invariants"},
      {"A5", "blow-up rate laws"},
      {"A6", "relative-error stability"},
      {"A7", "steady-state convergence"},
      {"A8", "physical/normalized round trip"},
      {"A9", "critical-norm growth"}};
  std::vector<AcceptanceLine> out;
  for (const auto& [tag, title] : lines) {
    AcceptanceLine al;
    al.tag = tag;
    al.title = title;
    al.pass = true;
    for (const auto& s : suites)
      for (const auto& c : s.checks)
        if (c.tag == tag) {
          al.ran = true;
          al.pass = al.pass && c.pass;
        }
    if (!al.ran) al.pass = false;
    out.push_back(std::move(al));
  }
  return out;
}

}  // namespace ylab

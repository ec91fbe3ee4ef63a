// Run orchestration: flow drivers, artifact emission, checkpoints, sweep pool.
#include "ylab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace ylab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kStateMagic[8] = {'Y', 'L', 'A', 'B', 'S', 'T', 'A', '1'};
constexpr double kPi = 3.14159265358979323846;

double unit_from(std::mt19937_64& eng) {
  // Engine output is fully pinned by the standard; distributions are not.
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Smooth seeded modulation in [-1, 1]: four low modes with random weights.
Vec seeded_modes(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::array<double, 4> c{};
  double norm = 0.0;
  for (auto& v : c) {
    v = 2.0 * unit_from(eng) - 1.0;
    norm += std::abs(v);
  }
  if (norm == 0.0) norm = 1.0;
  const Domain& dom = g.dom;
  const auto at = [&](const double* x) {
    double val = 0.0;
    if (dom.kind == DomainKind::box) {
      for (int k = 0; k < 4; ++k) {
        double m = 1.0;
        for (int i = 0; i < g.n; ++i)
          m *= std::sin((k + 1) * kPi * (x[i] - dom.lo[i]) / (dom.hi[i] - dom.lo[i]));
        val += c[k] * m;
      }
    } else {
      double s = 0.0;
      for (int i = 0; i < g.n; ++i) s += x[i] * x[i];
      const double r0 = dom.kind == DomainKind::annulus ? dom.inner : 0.0;
      const double z = std::clamp((std::sqrt(s) - r0) / (dom.radius - r0), 0.0, 1.0);
      for (int k = 0; k < 4; ++k) val += c[k] * std::sin((k + 1) * kPi * z);
    }
    return val / norm;
  };
  Vec f(g.size(), 0.0);
  if (g.mode == GridMode::radial) {
    std::array<double, kMaxN> x{};
    for (std::size_t i = 0; i < g.size(); ++i) {
      x[0] = g.r[i];
      f[i] = at(x.data());
    }
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = at(&g.xy[i * g.n]);
  }
  return f;
}

std::array<double, kMaxN> domain_center(const Domain& dom) {
  std::array<double, kMaxN> a{};
  if (dom.kind == DomainKind::annulus) a[0] = 0.5 * (dom.inner + dom.radius);
  if (dom.kind == DomainKind::box)
    for (int i = 0; i < dom.n; ++i) a[i] = 0.5 * (dom.lo[i] + dom.hi[i]);
  return a;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write " + tmp);
    os << text;
    if (!os.flush()) throw ConfigError("short write on " + tmp);
  }
  fs::rename(tmp, path);
}

void write_json_atomic(const std::string& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

void open_csv(std::ofstream& os, const std::string& path, bool append,
              const std::string& header) {
  const bool keep = append && fs::exists(path);
  os.open(path, keep ? std::ios::app : std::ios::trunc);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  if (!keep) os << header;
}

std::string flow_header(std::uint64_t hash) {
  return "# ylab normalized flow series, config=0x" + hex64(hash) +
         "\n# units: dimensionless throughout\n"
         "step,s,t,dt,r,Y,F,M2,vol_drift,min_u,max_u\n";
}

std::string fit_header(int n, std::uint64_t hash) {
  std::string cols = "s";
  for (int i = 1; i <= n; ++i) cols += ",a" + std::to_string(i);
  cols += ",lambda,alpha";
  for (int j = 0; j <= n + 1; ++j) cols += ",b" + std::to_string(j);
  cols += ",M2,w_h1,eta_l2t,ortho_defect,pohozaev_lhs,pohozaev_pred,closeness";
  return "# ylab bubble fit series, config=0x" + hex64(hash) +
         "\n# units: dimensionless throughout\n" + cols + "\n";
}

std::string phys_header(std::uint64_t hash) {
  return "# ylab physical flow series, config=0x" + hex64(hash) +
         "\n# units: dimensionless throughout\n"
         "step,tau,dt,mass_p,G,min_rho,max_rho\n";
}

void minmax_interior(const Grid& g, const Vec& u, double& mn, double& mx) {
  mn = std::numeric_limits<double>::infinity();
  mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!g.interior[i]) continue;
    mn = std::min(mn, u[i]);
    mx = std::max(mx, u[i]);
  }
}

json classification_json(const DichotomyReport& rep) {
  return json{{"outcome", outcome_name(rep.outcome)},
              {"evidence", rep.evidence},
              {"lambda_final", rep.lambda_final},
              {"m2_final", rep.m2_final}};
}

}  // namespace

const char* outcome_name(FlowOutcome oc) {
  switch (oc) {
    case FlowOutcome::bubble_concentration: return "Bubble";
    case FlowOutcome::steady_state: return "SteadyState";
    default: return "Undetermined";
  }
}

void make_workspace(const RunConfig& cfg, Workspace& ws) {
  cfg.validate();
  ws.grid = build_grid(cfg.dom, cfg.grid);
  ws.op = build_operators(ws.grid);
  ws.op.pcg_tol = cfg.elliptic_tol;
  if (cfg.flow_kind == "normalized" && cfg.fit_enable && cfg.lambda_stop > 0.0) {
    BubbleParams bp;
    bp.a = domain_center(cfg.dom);
    bp.lambda = cfg.lambda_stop;
    check_resolution(ws.grid, bp);  // the lambda ceiling must stay resolvable
  }
}

Vec initial_field(const Grid& g, const Operators& op, const RunConfig& cfg) {
  Vec u = preset_initial(g, op, cfg.initial, cfg.lambda0, cfg.seed == 0 ? cfg.eps : 0.0);
  if (cfg.seed != 0) {
    const Vec noise = seeded_modes(g, cfg.seed);
    for (std::size_t i = 0; i < u.size(); ++i)
      u[i] = std::max(u[i] * (1.0 + cfg.eps * noise[i]), 0.0);
  }
  return u;
}

// ---------------------------------------------------------------------------
// State checkpoints

void save_state(const StateCheckpoint& ck, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot open state checkpoint for writing: " + path);
    os.write(kStateMagic, 8);
    put_u64(os, 1);  // version
    put_u64(os, static_cast<std::uint64_t>(ck.kind));
    put_u64(os, ck.config_hash);
    put_f64(os, ck.aux);
    if (ck.kind == 0) {
      put_i64(os, ck.flow.step);
      put_f64(os, ck.flow.s);
      put_f64(os, ck.flow.t);
      put_f64(os, ck.flow.dt);
      put_f64(os, ck.flow.r);
      put_f64(os, ck.flow.vol);
      put_f64(os, ck.flow.m2);
      put_u64(os, ck.flow.u.size());
      put_f64v(os, ck.flow.u);
    } else {
      put_i64(os, ck.phys.step);
      put_f64(os, ck.phys.tau);
      put_f64(os, ck.phys.dt);
      put_f64(os, ck.phys.mass_p);
      put_u64(os, ck.phys.rho.size());
      put_f64v(os, ck.phys.rho);
    }
    if (!os.flush()) throw ConfigError("short write on state checkpoint: " + path);
  }
  fs::rename(tmp, path);
}

StateCheckpoint load_state(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open state checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kStateMagic, 8) != 0)
    throw ConfigError("bad state checkpoint magic: " + path);
  if (get_u64(is) != 1) throw ConfigError("unsupported state checkpoint version: " + path);
  StateCheckpoint ck;
  ck.kind = static_cast<int>(get_u64(is));
  if (ck.kind != 0 && ck.kind != 1) throw ConfigError("corrupt state checkpoint: " + path);
  ck.config_hash = get_u64(is);
  ck.aux = get_f64(is);
  if (ck.kind == 0) {
    ck.flow.step = get_i64(is);
    ck.flow.s = get_f64(is);
    ck.flow.t = get_f64(is);
    ck.flow.dt = get_f64(is);
    ck.flow.r = get_f64(is);
    ck.flow.vol = get_f64(is);
    ck.flow.m2 = get_f64(is);
    const std::uint64_t m = get_u64(is);
    if (m > (std::uint64_t(1) << 32)) throw ConfigError("corrupt state checkpoint: " + path);
    ck.flow.u = get_f64v(is, m);
  } else {
    ck.phys.step = get_i64(is);
    ck.phys.tau = get_f64(is);
    ck.phys.dt = get_f64(is);
    ck.phys.mass_p = get_f64(is);
    const std::uint64_t m = get_u64(is);
    if (m > (std::uint64_t(1) << 32)) throw ConfigError("corrupt state checkpoint: " + path);
    ck.phys.rho = get_f64v(is, m);
  }
  if (!is) throw ConfigError("truncated state checkpoint: " + path);
  return ck;
}

// ---------------------------------------------------------------------------
// Normalized driver

RunResult run_normalized(const Grid& g, const Operators& op, const RunConfig& cfg, const Vec& u0,
                         const StateCheckpoint* resume) {
  const int n = g.n;
  RunResult res;
  FlowState& st = res.state;
  if (resume)
    st = resume->flow;
  else
    init_flow_state(g, op, st, u0, cfg.fopt);

  const bool emit = !cfg.out_dir.empty();
  const std::uint64_t hash = cfg.hash();
  std::ofstream flow_os, fit_os;
  if (emit) {
    fs::create_directories(cfg.out_dir);
    open_csv(flow_os, cfg.out_dir + "/flow.csv", resume != nullptr, flow_header(hash));
    if (cfg.fit_enable)
      open_csv(fit_os, cfg.out_dir + "/fit.csv", resume != nullptr, fit_header(n, hash));
  }
  const auto checkpoint = [&]() {
    if (!emit) return;
    StateCheckpoint ck;
    ck.kind = 0;
    ck.config_hash = hash;
    ck.flow = st;
    save_state(ck, cfg.out_dir + "/state.ckpt");
  };

  double row_max_u = 0.0;
  const auto push_row = [&](double dt_used) {
    double mn, mx;
    minmax_interior(g, st.u, mn, mx);
    row_max_u = mx;
    const double u8 = integrate_pow(g, st.u, 8.0);
    res.series.s.push_back(st.s);
    res.series.dt.push_back(dt_used);
    res.series.r.push_back(st.r);
    res.series.m2.push_back(st.m2);
    res.series.vol_err.push_back(std::abs(st.vol - 1.0));
    res.series.u8.push_back(u8);
    res.series.max_u.push_back(mx);
    if (flow_os.is_open()) {
      const double y = st.r / std::pow(st.vol, (n - 2.0) / n);
      const double f = (2.0 / n) * std::pow(std::max(st.r, 0.0), 0.5 * n);
      flow_os << st.step << ',' << fmt_g17(st.s) << ',' << fmt_g17(st.t) << ','
              << fmt_g17(dt_used) << ',' << fmt_g17(st.r) << ',' << fmt_g17(y) << ','
              << fmt_g17(f) << ',' << fmt_g17(st.m2) << ',' << fmt_g17(std::abs(st.vol - 1.0))
              << ',' << fmt_g17(mn) << ',' << fmt_g17(mx) << '\n';
    }
  };

  const auto warn = [&res](const std::string& msg) {
    if (res.warnings.size() < 32) res.warnings.push_back(msg);
  };

  BubbleFit prev;
  bool have_prev = false;
  double proxy_last = 0.0, eta_last = -1.0;
  std::int64_t last_fit_step = st.step;
  const auto lambda_proxy = [&](double umax) {
    return std::pow(std::max(umax, 1e-300), 2.0 / (n - 2.0));
  };
  const auto h_center_for = [&](const BubbleParams& bp) {
    if (g.dom.kind == DomainKind::ball)
      return ball_green_regular(n, g.dom.radius, bp.a.data(), bp.a.data());
    if (g.dom.kind == DomainKind::annulus && g.mode == GridMode::radial)
      return 0.0;  // no centered Green pole; prediction columns read 0
    return -1.0;   // decompose recomputes at the fitted center
  };
  const auto do_fit = [&]() {
    FitRecord fr;
    fr.s = st.s;
    fr.m2 = st.m2;
    fr.fit = fit_bubble(g, op, st.u, cfg.fit, have_prev ? &prev : nullptr);
    fr.dec = decompose(g, op, st.u, fr.fit, h_center_for(fr.fit.params));
    if (!fr.fit.converged)
      warn("fit did not converge at s = " + fmt_g17(st.s));
    if (eta_last >= 0.0 && fr.fit.eta_l2 > 1.5 * eta_last + 1e-14)
      warn("fit residual jumped by more than 50% at s = " + fmt_g17(st.s) +
           " (possible basin hop)");
    eta_last = fr.fit.eta_l2;
    prev = fr.fit;
    have_prev = true;
    proxy_last = lambda_proxy(row_max_u);
    last_fit_step = st.step;
    res.rate.push_back({st.s, fr.fit.params.lambda, st.m2, fr.dec.b[0], st.r});
    if (fit_os.is_open()) {
      std::string line = fmt_g17(fr.s);
      for (int i = 0; i < n; ++i) line += "," + fmt_g17(fr.fit.params.a[i]);
      line += "," + fmt_g17(fr.fit.params.lambda) + "," + fmt_g17(fr.fit.alpha);
      for (int j = 0; j < n + 2; ++j) line += "," + fmt_g17(fr.dec.b[j]);
      line += "," + fmt_g17(fr.m2) + "," + fmt_g17(fr.dec.w_h1) + "," + fmt_g17(fr.dec.eta_w) +
              "," + fmt_g17(fr.dec.ortho_defect) + "," + fmt_g17(fr.dec.pohozaev_lhs) + "," +
              fmt_g17(fr.dec.pohozaev_pred) + "," + fmt_g17(fr.dec.closeness);
      fit_os << line << '\n';
    }
    res.fits.push_back(std::move(fr));
  };

  if (!resume) {
    push_row(0.0);
    if (cfg.fit_enable) do_fit();
  } else {
    double mn;
    minmax_interior(g, st.u, mn, row_max_u);
    proxy_last = lambda_proxy(row_max_u);
  }

  std::size_t next_mark = 0;
  while (next_mark < cfg.snapshot_s.size() &&
         cfg.snapshot_s[next_mark] <= st.s - cfg.fopt.dt_min)
    ++next_mark;  // marks already passed before a resume

  try {
    for (;;) {
      while (next_mark < cfg.snapshot_s.size() &&
             cfg.snapshot_s[next_mark] - st.s <= cfg.fopt.dt_min) {
        res.snapshots.push_back({st.s, st.u});
        ++next_mark;
      }
      if (st.s >= cfg.s_end - 1e-12 * std::max(1.0, cfg.s_end)) {
        res.status = "s-end";
        break;
      }
      if (st.step >= cfg.max_steps) {
        res.status = "max-steps";
        break;
      }
      if (cfg.steady_m2_tol > 0.0 && st.step > 20 && st.m2 <= cfg.steady_m2_tol) {
        res.status = "steady";
        break;
      }
      if (cfg.fit_enable && cfg.lambda_stop > 0.0 && have_prev &&
          prev.params.lambda >= cfg.lambda_stop) {
        res.status = "lambda-stop";
        break;
      }

      double dt_keep = st.dt;
      bool clamped = false;
      if (next_mark < cfg.snapshot_s.size()) {
        const double rem = cfg.snapshot_s[next_mark] - st.s;
        if (st.dt > rem) {
          st.dt = rem;
          clamped = true;
        }
      }
      const StepInfo info = step_yamabe(g, op, st, cfg.fopt);
      if (clamped && info.rejects == 0) st.dt = std::max(st.dt, dt_keep);
      push_row(info.dt_used);

      if (emit && cfg.checkpoint_every > 0 && st.step % cfg.checkpoint_every == 0) {
        flow_os.flush();
        if (fit_os.is_open()) fit_os.flush();
        checkpoint();
      }
      if (cfg.fit_enable) {
        const double proxy = lambda_proxy(row_max_u);
        if (st.step - last_fit_step >= cfg.fit_max_gap ||
            std::abs(proxy / std::max(proxy_last, 1e-300) - 1.0) >= cfg.fit_cadence)
          do_fit();
      }
    }
  } catch (const SolverAbort& e) {
    if (emit) {
      checkpoint();
      write_json_atomic(cfg.out_dir + "/failure.json",
                        json{{"error", e.what()}, {"step", st.step}, {"s", st.s}});
    }
    throw;
  }

  if (cfg.fit_enable && (res.fits.empty() || res.fits.back().s < st.s)) do_fit();
  res.classification = classify_dichotomy(res.rate, cfg.lambda_stop > 0.0 ? cfg.lambda_stop : 50.0,
                                          cfg.steady_m2_tol > 0.0 ? cfg.steady_m2_tol : 1e-8);
  if (emit) checkpoint();
  return res;
}

// ---------------------------------------------------------------------------
// Physical driver

PhysicalRunResult run_physical(const Grid& g, const Operators& op, const RunConfig& cfg,
                               const Vec& rho0, const StateCheckpoint* resume) {
  PhysicalRunResult res;
  PhysicalState& st = res.state;
  double g0 = 0.0;
  if (resume) {
    st = resume->phys;
    g0 = resume->aux;
  } else {
    init_physical_state(g, st, rho0, cfg.fopt);
    g0 = std::pow(st.mass_p, 2.0 / g.n);
  }

  const bool emit = !cfg.out_dir.empty();
  const std::uint64_t hash = cfg.hash();
  std::ofstream phys_os;
  if (emit) {
    fs::create_directories(cfg.out_dir);
    open_csv(phys_os, cfg.out_dir + "/phys.csv", resume != nullptr, phys_header(hash));
  }
  const auto checkpoint = [&]() {
    if (!emit) return;
    StateCheckpoint ck;
    ck.kind = 1;
    ck.config_hash = hash;
    ck.aux = g0;
    ck.phys = st;
    save_state(ck, cfg.out_dir + "/state.ckpt");
  };
  const auto push_row = [&](double dt_used) {
    res.tau.push_back(st.tau);
    res.mass_p.push_back(st.mass_p);
    if (phys_os.is_open()) {
      double mn, mx;
      minmax_interior(g, st.rho, mn, mx);
      phys_os << st.step << ',' << fmt_g17(st.tau) << ',' << fmt_g17(dt_used) << ','
              << fmt_g17(st.mass_p) << ',' << fmt_g17(std::pow(st.mass_p, 2.0 / g.n)) << ','
              << fmt_g17(mn) << ',' << fmt_g17(mx) << '\n';
    }
  };

  if (!resume) push_row(0.0);

  try {
    for (;;) {
      if (std::pow(st.mass_p, 2.0 / g.n) <= cfg.mass_floor * g0) {
        res.status = "mass-floor";
        break;
      }
      if (cfg.tau_end > 0.0 && st.tau >= cfg.tau_end) {
        res.status = "tau-end";
        break;
      }
      if (st.step >= cfg.max_steps) {
        res.status = "max-steps";
        break;
      }
      const StepInfo info = step_physical(g, op, st, cfg.fopt);
      push_row(info.dt_used);
      if (cfg.snapshot_stride > 0 && st.step % cfg.snapshot_stride == 0)
        res.snapshots.push_back({st.tau, st.rho});
      if (emit && cfg.checkpoint_every > 0 && st.step % cfg.checkpoint_every == 0) {
        phys_os.flush();
        checkpoint();
      }
    }
  } catch (const SolverAbort& e) {
    if (emit) {
      checkpoint();
      write_json_atomic(cfg.out_dir + "/failure.json",
                        json{{"error", e.what()}, {"step", st.step}, {"tau", st.tau}});
    }
    throw;
  }

  if (res.tau.size() >= 24) {
    try {
      res.extinction = estimate_extinction(res.tau, res.mass_p, g.n);
      res.extinction_valid = true;
    } catch (const SolverAbort&) {
      res.extinction_valid = false;
    }
  }
  if (emit) checkpoint();
  return res;
}

// ---------------------------------------------------------------------------
// Config-driven entry

int run_config(const RunConfig& cfg, const std::string& resume_path) {
  Workspace ws;
  make_workspace(cfg, ws);
  const std::uint64_t hash = cfg.hash();
  const bool emit = !cfg.out_dir.empty();
  if (emit) {
    fs::create_directories(cfg.out_dir);
    write_text_atomic(cfg.out_dir + "/config.resolved", cfg.canonical_text());
    save_grid(ws.grid, cfg.out_dir + "/grid.ckpt");
  }

  StateCheckpoint rk;
  bool resuming = false;
  if (!resume_path.empty()) {
    rk = load_state(resume_path);
    if (rk.config_hash != hash)
      throw ConfigError("checkpoint was written by a different config: " + resume_path);
    const int want = cfg.flow_kind == "physical" ? 1 : 0;
    if (rk.kind != want) throw ConfigError("checkpoint flow kind mismatch: " + resume_path);
    resuming = true;
  }

  json summary{{"config", "0x" + hex64(hash)},
               {"preset", cfg.preset},
               {"n", cfg.dom.n},
               {"flow_kind", cfg.flow_kind},
               {"grid_nodes", ws.grid.size()}};

  if (cfg.flow_kind == "normalized") {
    Vec u0;
    if (!resuming) u0 = initial_field(ws.grid, ws.op, cfg);
    const RunResult rr = run_normalized(ws.grid, ws.op, cfg, u0, resuming ? &rk : nullptr);
    std::cout << "run: status=" << rr.status << " steps=" << rr.state.step
              << " s=" << fmt_g17(rr.state.s) << " r=" << fmt_g17(rr.state.r)
              << " M2=" << fmt_g17(rr.state.m2)
              << " outcome=" << outcome_name(rr.classification.outcome) << "\n";
    if (!emit) return 0;

    summary["status"] = rr.status;
    summary["steps"] = rr.state.step;
    summary["final"] = json{{"s", rr.state.s},
                            {"t", rr.state.t},
                            {"r", rr.state.r},
                            {"M2", rr.state.m2},
                            {"vol", rr.state.vol}};
    if (!rr.fits.empty()) summary["lambda_final"] = rr.fits.back().fit.params.lambda;
    summary["classification"] = classification_json(rr.classification);
    summary["warnings"] = rr.warnings;
    write_json_atomic(cfg.out_dir + "/classification.json",
                      classification_json(rr.classification));

    json rate;
    if (rr.classification.outcome == FlowOutcome::bubble_concentration) {
      double lam_max = 0.0;
      for (const auto& smp : rr.rate) lam_max = std::max(lam_max, smp.lambda);
      std::vector<RateSample> window;
      for (const auto& smp : rr.rate)
        if (smp.lambda >= 0.1 * lam_max) window.push_back(smp);
      if (window.size() >= 8) {
        const BubbleParams& bp = rr.fits.back().fit.params;
        double hc = -1.0;
        if (ws.grid.dom.kind == DomainKind::ball)
          hc = ball_green_regular(cfg.dom.n, cfg.dom.radius, bp.a.data(), bp.a.data());
        else {
          try {
            hc = green_regular_at_center(ws.grid, ws.op, bp.a.data());
          } catch (const SolverAbort&) {
            hc = -1.0;
          }
        }
        if (hc > 0.0) {
          const RateReport rep = rate_report(window, cfg.dom.n, hc);
          rate = json{{"m2_slope", rep.m2_slope},
                      {"plateau_mean", rep.plateau_mean},
                      {"plateau_dev", rep.plateau_dev},
                      {"plateau_mean_alt", rep.plateau_mean_alt},
                      {"b0_ratio_first", rep.b0_ratio_first},
                      {"b0_ratio_last", rep.b0_ratio_last},
                      {"r_gap_slope", rep.r_gap_slope},
                      {"samples", rep.samples},
                      {"window", json{{"lambda_min", 0.1 * lam_max},
                                      {"lambda_max", lam_max},
                                      {"h_center", hc}}}};
        } else {
          rate = json{{"skipped", "no Green regular part at the fitted center"}};
        }
      } else {
        rate = json{{"skipped", "fewer than 8 fit samples in the last decade"}};
      }
    } else {
      rate = json{{"skipped", "run did not classify as bubble concentration"}};
    }
    write_json_atomic(cfg.out_dir + "/rate_report.json", rate);

    for (const auto& snap : rr.snapshots) {
      // Name each snapshot by its nearest s mark so a resumed run writes the
      // same files a straight-through run would.
      std::size_t idx = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < cfg.snapshot_s.size(); ++j) {
        const double d = std::abs(cfg.snapshot_s[j] - snap.at);
        if (d < best) {
          best = d;
          idx = j;
        }
      }
      StateCheckpoint ck;
      ck.kind = 0;
      ck.config_hash = hash;
      ck.flow.u = snap.field;
      ck.flow.s = snap.at;
      save_state(ck, cfg.out_dir + "/snapshot_" + std::to_string(idx) + ".ckpt");
    }
  } else {
    Vec rho0;
    if (!resuming) {
      const DimensionConstants& dc = dimension_constants(cfg.dom.n);
      Vec u0 = initial_field(ws.grid, ws.op, cfg);
      for (std::size_t i = 0; i < u0.size(); ++i)
        if (!ws.grid.interior[i]) u0[i] = 0.0;
      const double v = integrate_pow(ws.grid, u0, dc.p + 1.0);
      if (!(v > 0.0)) throw SolverAbort("initial data has no volume");
      const double c = std::pow(v, -1.0 / (dc.p + 1.0));
      for (auto& x : u0) x *= c;
      rho0 = rho_from_unit(ws.grid, u0, 1.0);
    }
    const PhysicalRunResult pr =
        run_physical(ws.grid, ws.op, cfg, rho0, resuming ? &rk : nullptr);
    std::cout << "run: status=" << pr.status << " steps=" << pr.state.step
              << " tau=" << fmt_g17(pr.state.tau) << " mass_p=" << fmt_g17(pr.state.mass_p);
    if (pr.extinction_valid) std::cout << " t_star=" << fmt_g17(pr.extinction.t_star);
    std::cout << "\n";
    if (!emit) return 0;

    summary["status"] = pr.status;
    summary["steps"] = pr.state.step;
    summary["final"] = json{{"tau", pr.state.tau}, {"mass_p", pr.state.mass_p}};
    json ext{{"valid", pr.extinction_valid}};
    if (pr.extinction_valid) {
      ext["t_star"] = pr.extinction.t_star;
      ext["slope"] = pr.extinction.slope;
      ext["intercept"] = pr.extinction.intercept;
      ext["fit_rms"] = pr.extinction.fit_rms;
      ext["window_gap"] = pr.extinction.window_gap;
      ext["monotone"] = pr.extinction.monotone;
      ext["samples"] = pr.extinction.samples;
    }
    summary["extinction"] = ext;
    write_json_atomic(cfg.out_dir + "/extinction.json", ext);

    for (std::size_t k = 0; k < pr.snapshots.size(); ++k) {
      StateCheckpoint ck;
      ck.kind = 1;
      ck.config_hash = hash;
      ck.phys.rho = pr.snapshots[k].field;
      ck.phys.tau = pr.snapshots[k].at;
      save_state(ck, cfg.out_dir + "/snapshot_" + std::to_string(k) + ".ckpt");
    }
  }

  write_json_atomic(cfg.out_dir + "/summary.json", summary);
  return 0;
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const VerifyFailure*>(&e)) return 4;
  return 3;  // solver aborts, resolution guards, anything unexpected
}

}  // namespace

int sweep_glob(const std::string& pattern) {
  const std::size_t cut = pattern.find_last_of('/');
  const std::string dir = cut == std::string::npos ? "." : pattern.substr(0, cut);
  const std::string base = cut == std::string::npos ? pattern : pattern.substr(cut + 1);
  std::string rx = "^";
  for (char ch : base) {
    if (ch == '*') rx += ".*";
    else if (ch == '?') rx += '.';
    else if (std::strchr("\\^$.|?*+()[]{}", ch)) rx += std::string("\\") + ch;
    else rx += ch;
  }
  rx += "$";
  const std::regex re(rx);

  std::vector<std::string> files;
  if (fs::is_directory(dir)) {
    for (const auto& ent : fs::directory_iterator(dir)) {
      if (!ent.is_regular_file()) continue;
      const std::string name = ent.path().filename().string();
      if (std::regex_match(name, re)) files.push_back(ent.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("sweep matched no config files: " + pattern);

  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{0};
  std::mutex out_mx;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= files.size()) return;
      int code = 0;
      std::string note = "ok";
      try {
        run_config(load_config_file(files[k]));
      } catch (const std::exception& e) {
        code = exit_code_for(e);
        note = e.what();
      }
      int cur = worst.load();
      while (cur < code && !worst.compare_exchange_weak(cur, code)) {
      }
      std::lock_guard<std::mutex> lk(out_mx);
      std::cout << "sweep: " << files[k] << ": " << note << "\n";
    }
  };
  const int workers =
      std::max(1, std::min<int>(thread_count(), static_cast<int>(files.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return worst.load();
}

// ---------------------------------------------------------------------------
// Report

CsvTable read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open csv: " + path);
  CsvTable t;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    if (t.cols.empty()) {
      while (std::getline(ss, cell, ',')) t.cols.push_back(cell);
      continue;
    }
    Vec row;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw ConfigError("non-numeric csv cell in " + path);
      row.push_back(v);
    }
    if (row.size() != t.cols.size()) throw ConfigError("ragged csv row in " + path);
    t.rows.push_back(std::move(row));
  }
  if (t.cols.empty()) throw ConfigError("empty csv: " + path);
  return t;
}

namespace {

std::size_t col_index(const CsvTable& t, const std::string& name, const std::string& path) {
  for (std::size_t i = 0; i < t.cols.size(); ++i)
    if (t.cols[i] == name) return i;
  throw ConfigError("column '" + name + "' missing from " + path);
}

void write_tsv(const std::string& path, const std::vector<std::string>& cols,
               const std::vector<Vec>& rows) {
  std::string text;
  for (std::size_t i = 0; i < cols.size(); ++i)
    text += (i ? "\t" : "") + cols[i];
  text += "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i)
      text += (i ? "\t" : "") + fmt_g17(r[i]);
    text += "\n";
  }
  write_text_atomic(path, text);
  std::cout << "report: wrote " << path << " (" << rows.size() << " rows)\n";
}

}  // namespace

int report_run_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("no such run directory: " + dir);
  const std::string sum_path = dir + "/summary.json";
  std::ifstream sis(sum_path);
  if (!sis) throw ConfigError("missing summary.json in " + dir);
  json summary;
  try {
    sis >> summary;
  } catch (const std::exception& e) {
    throw ConfigError("cannot parse " + sum_path + ": " + e.what());
  }
  const int n = summary.value("n", 0);
  if (n < 3 || n > kMaxN) throw ConfigError("summary.json carries no valid dimension");

  bool any = false;
  const std::string flow_path = dir + "/flow.csv";
  if (fs::exists(flow_path)) {
    const CsvTable t = read_csv(flow_path);
    const std::size_t cs = col_index(t, "s", flow_path);
    const std::size_t cr = col_index(t, "r", flow_path);
    std::vector<Vec> rows;
    for (const auto& row : t.rows) rows.push_back({row[cs], row[cr]});
    write_tsv(dir + "/r_s.tsv", {"s", "r"}, rows);
    any = true;
  }
  const std::string fit_path = dir + "/fit.csv";
  if (fs::exists(fit_path)) {
    const CsvTable t = read_csv(fit_path);
    const std::size_t cs = col_index(t, "s", fit_path);
    const std::size_t cl = col_index(t, "lambda", fit_path);
    const std::size_t cm = col_index(t, "M2", fit_path);
    const std::size_t cc = col_index(t, "closeness", fit_path);
    std::vector<Vec> lam_s, m2_lam, rel;
    for (const auto& row : t.rows) {
      lam_s.push_back({row[cs], row[cl]});
      m2_lam.push_back({row[cl], row[cm]});
      const double norm = std::pow(std::max(row[cm], 0.0), 2.0 / (n + 2.0)) +
                          std::pow(row[cl], -2.0 / (n + 2.0));
      rel.push_back({row[cs], row[cc], row[cc] / norm});
    }
    write_tsv(dir + "/lambda_s.tsv", {"s", "lambda"}, lam_s);
    write_tsv(dir + "/m2_lambda.tsv", {"lambda", "M2"}, m2_lam);
    write_tsv(dir + "/relerr.tsv", {"s", "closeness", "normalized"}, rel);
    any = true;
  }
  const std::string phys_path = dir + "/phys.csv";
  if (fs::exists(phys_path)) {
    const CsvTable t = read_csv(phys_path);
    const std::size_t ct = col_index(t, "tau", phys_path);
    const std::size_t cg = col_index(t, "G", phys_path);
    std::vector<Vec> rows;
    for (const auto& row : t.rows) rows.push_back({row[ct], row[cg]});
    write_tsv(dir + "/g_tau.tsv", {"tau", "G"}, rows);
    any = true;
  }
  if (!any) throw ConfigError("no flow.csv, fit.csv, or phys.csv in " + dir);
  return 0;
}

}  // namespace ylab

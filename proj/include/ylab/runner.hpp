// Flow drivers: normalized and physical runs with fit cadence, streamed CSV
// artifacts, exact-landing snapshots, and resumable state checkpoints.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ylab/analysis.hpp"
#include "ylab/config.hpp"
#include "ylab/flow.hpp"

namespace ylab {

struct FitRecord {
  double s = 0.0;
  double m2 = 0.0;  // flow M2 at fit time
  BubbleFit fit;
  DecompositionReport dec;
};

struct Snapshot {
  double at = 0.0;  // s for normalized runs, tau for physical runs
  Vec field;
};

// One entry per row of the flow CSV, index 0 = initial state.
struct StepSeries {
  std::vector<double> s, dt, r, m2, vol_err, u8, max_u;
};

struct RunResult {
  FlowState state;
  StepSeries series;
  std::vector<FitRecord> fits;
  std::vector<RateSample> rate;
  std::vector<Snapshot> snapshots;
  DichotomyReport classification;
  std::string status;  // s-end | lambda-stop | steady | max-steps
  std::vector<std::string> warnings;
};

struct PhysicalRunResult {
  PhysicalState state;
  std::vector<double> tau, mass_p;  // per accepted step, index 0 = initial
  std::vector<Snapshot> snapshots;
  ExtinctionReport extinction;
  bool extinction_valid = false;
  std::string status;  // mass-floor | tau-end | max-steps
};

// Operators hold a pointer into grid, so a workspace must stay put once
// filled; copies and moves are disabled.
struct Workspace {
  Grid grid;
  Operators op;
  Workspace() = default;
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;
};

// Grid + operators for a config; applies the elliptic tolerance and, for
// normalized runs with a lambda ceiling, the resolution guard.
void make_workspace(const RunConfig& cfg, Workspace& ws);

// Initial field per cfg.initial; seed != 0 adds the seeded smooth modulation.
Vec initial_field(const Grid& g, const Operators& op, const RunConfig& cfg);

struct StateCheckpoint;

RunResult run_normalized(const Grid& g, const Operators& op, const RunConfig& cfg, const Vec& u0,
                         const StateCheckpoint* resume = nullptr);
PhysicalRunResult run_physical(const Grid& g, const Operators& op, const RunConfig& cfg,
                               const Vec& rho0, const StateCheckpoint* resume = nullptr);

// Config-driven run writing all artifacts under cfg.out_dir. resume_path
// reloads a state checkpoint (config hash must match). Returns 0.
int run_config(const RunConfig& cfg, const std::string& resume_path = "");

// Independent runs of every config matching the glob, on a pool bounded by
// thread_count(). Returns the worst per-run exit code.
int sweep_glob(const std::string& pattern);

// Plot-ready TSV extraction from a run directory's CSV artifacts.
int report_run_dir(const std::string& dir);

// FlowState / PhysicalState checkpoints (magic YLABSTA1).
struct StateCheckpoint {
  int kind = 0;  // 0 = normalized, 1 = physical
  std::uint64_t config_hash = 0;
  double aux = 0.0;  // physical runs: G at the start of the run
  FlowState flow;
  PhysicalState phys;
};
void save_state(const StateCheckpoint& ck, const std::string& path);
StateCheckpoint load_state(const std::string& path);

// Comment-skipping CSV reader for report and tests.
struct CsvTable {
  std::vector<std::string> cols;
  std::vector<Vec> rows;
};
CsvTable read_csv(const std::string& path);

const char* outcome_name(FlowOutcome oc);

}  // namespace ylab

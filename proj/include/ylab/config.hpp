// Run configuration: flat key = value sections, named experiment presets,
// canonical serialization and the config hash stamped on outputs.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ylab/analysis.hpp"
#include "ylab/flow.hpp"
#include "ylab/geometry.hpp"

namespace ylab {

struct RunConfig {
  // [domain] / [grid]
  Domain dom;
  GridSpec grid;

  // [flow]
  std::string flow_kind = "normalized";  // normalized | physical
  std::string initial = "dome";          // dome | bubble | perturbed-bubble
  double lambda0 = 2.0;                  // bubble presets
  double eps = 0.05;                     // perturbation amplitude
  std::uint64_t seed = 0;                // seeded smooth perturbation; 0 = deterministic dome
  FlowOptions fopt;
  double s_end = 6.0;
  double lambda_stop = 50.0;  // normalized stop on fitted lambda; 0 disables
  std::int64_t max_steps = 100000;
  double steady_m2_tol = 0.0;  // > 0 stops normalized runs once M2 settles below it
  double mass_floor = 0.02;    // physical stop: G <= mass_floor * G(0)
  double tau_end = 0.0;        // physical stop on time; 0 disables

  // [fit]
  bool fit_enable = true;
  double fit_cadence = 0.02;       // refit when the lambda proxy moves this fraction
  std::int64_t fit_max_gap = 200;  // and at least every this many steps
  FitOptions fit;

  // [tolerances]
  double elliptic_tol = 1e-10;

  // [output]
  std::string out_dir;                 // empty = no artifacts on disk
  std::int64_t checkpoint_every = 500; // steps between state checkpoints; 0 = final only
  std::int64_t snapshot_stride = 0;    // physical runs: keep rho every k steps
  std::vector<double> snapshot_s;      // normalized runs: exact-landing s marks

  std::string preset;  // provenance: preset that seeded this config, if any

  // Sorted section.key=value dump; reruns hash identically.
  std::string canonical_text() const;
  std::uint64_t hash() const;
  void validate() const;  // throws ConfigError
};

std::vector<std::string> preset_names();
RunConfig preset_config(const std::string& name);

// Parse config text; origin names the source in diagnostics. A leading
// "preset = <name>" row seeds defaults which later keys override.
RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig load_config_file(const std::string& path);

}  // namespace ylab

// ylab command line: run, sweep, report, constants, verify.
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ylab/bubble.hpp"
#include "ylab/config.hpp"
#include "ylab/runner.hpp"
#include "ylab/util.hpp"
#include "ylab/verify.hpp"

namespace {

int cmd_constants(int n) {
  const ylab::DimensionConstants& dc = ylab::dimension_constants(n);
  nlohmann::json j{{"n", dc.n},
                   {"p", dc.p},
                   {"m", dc.m},
                   {"u_coeff", dc.u_coeff},
                   {"sphere_area", dc.sphere},
                   {"K", dc.sobolev},
                   {"C2", dc.poho_c2},
                   {"C_bar", dc.rate_cbar},
                   {"C3", dc.rate_c3},
                   {"C3_alt", dc.rate_c3_alt},
                   {"kappa_t", dc.kappa_t},
                   {"kappa_s", dc.kappa_s},
                   {"delta_exp", dc.delta_exp}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_verify(const std::string& suite, const std::string& json_path) {
  const auto suites = ylab::run_verify(suite, std::cout);
  for (const auto& al : ylab::acceptance_summary(suites)) {
    if (!al.ran) continue;
    std::cout << "[" << al.tag << " " << (al.pass ? "PASS" : "FAIL") << "] " << al.title
              << "\n";
  }
  if (!json_path.empty()) {
    std::ofstream os(json_path, std::ios::trunc);
    if (!os) throw ylab::ConfigError("cannot write " + json_path);
    os << ylab::verify_json(suites);
  }
  if (!ylab::all_passed(suites)) throw ylab::VerifyFailure("verification checks failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ylab: critical fast diffusion and its normalized flow on bounded domains"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one configuration");
  std::string cfg_path, preset, out_override, resume;
  run->add_option("config", cfg_path, "config file (key = value sections)");
  run->add_option("--preset", preset, "named preset instead of a config file");
  run->add_option("--out", out_override, "override the output directory");
  run->add_option("--resume", resume, "state checkpoint to resume from");

  auto* presets = app.add_subcommand("presets", "list named presets");

  auto* constants = app.add_subcommand("constants", "print dimension constants as JSON");
  int cn = 3;
  constants->add_option("n", cn, "dimension (3, 4, or 5)")->required();

  auto* verify = app.add_subcommand("verify", "run verification suites");
  std::string suite = "all", verify_json_path;
  verify->add_option("suite", suite, "suite name or 'all'");
  verify->add_option("--json", verify_json_path, "write a JSON summary to this path");

  auto* sweep = app.add_subcommand("sweep", "run every config matching a glob");
  std::string glob;
  sweep->add_option("glob", glob, "config file glob, e.g. configs/*.cfg")->required();

  auto* report = app.add_subcommand("report", "extract plot-ready TSV tables from a run");
  std::string run_dir;
  report->add_option("dir", run_dir, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      if (cfg_path.empty() == preset.empty())
        throw ylab::ConfigError("run needs a config file or --preset, not both");
      ylab::RunConfig cfg =
          preset.empty() ? ylab::load_config_file(cfg_path) : ylab::preset_config(preset);
      if (!out_override.empty()) cfg.out_dir = out_override;
      return ylab::run_config(cfg, resume);
    }
    if (presets->parsed()) {
      for (const auto& name : ylab::preset_names()) std::cout << name << "\n";
      return 0;
    }
    if (constants->parsed()) return cmd_constants(cn);
    if (verify->parsed()) return cmd_verify(suite, verify_json_path);
    if (sweep->parsed()) return ylab::sweep_glob(glob);
    if (report->parsed()) return ylab::report_run_dir(run_dir);
  } catch (const ylab::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ylab::VerifyFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ylab::ResolutionGuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

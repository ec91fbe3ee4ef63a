// Config parsing with line diagnostics, presets, canonical hashing.
#include "ylab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ylab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& v, const std::string& origin, int line) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') fail(origin, line, "expected a number, got '" + v + "'");
  return x;
}

std::int64_t parse_int(const std::string& v, const std::string& origin, int line) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') fail(origin, line, "expected an integer, got '" + v + "'");
  return static_cast<std::int64_t>(x);
}

std::uint64_t parse_u64(const std::string& v, const std::string& origin, int line) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    fail(origin, line, "expected an unsigned integer, got '" + v + "'");
  return static_cast<std::uint64_t>(x);
}

bool parse_bool(const std::string& v, const std::string& origin, int line) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  fail(origin, line, "expected a boolean, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& v, const std::string& origin, int line) {
  std::vector<double> out;
  std::istringstream is(v);
  std::string tok;
  while (is >> tok) out.push_back(parse_double(tok, origin, line));
  return out;
}

DomainKind parse_kind(const std::string& v, const std::string& origin, int line) {
  if (v == "ball") return DomainKind::ball;
  if (v == "annulus") return DomainKind::annulus;
  if (v == "box") return DomainKind::box;
  fail(origin, line, "unknown domain kind '" + v + "'");
}

const char* kind_name(DomainKind k) {
  switch (k) {
    case DomainKind::ball: return "ball";
    case DomainKind::annulus: return "annulus";
    default: return "box";
  }
}

}  // namespace

std::string RunConfig::canonical_text() const {
  std::vector<std::string> rows;
  auto put = [&rows](const std::string& key, const std::string& val) {
    rows.push_back(key + "=" + val);
  };
  auto putd = [&put](const std::string& key, double v) { put(key, fmt_g17(v)); };
  auto puti = [&put](const std::string& key, std::int64_t v) { put(key, std::to_string(v)); };

  put("domain.kind", kind_name(dom.kind));
  puti("domain.n", dom.n);
  putd("domain.radius", dom.radius);
  putd("domain.inner", dom.inner);
  for (int i = 0; i < dom.n; ++i) putd("domain.lo." + std::to_string(i), dom.lo[i]);
  for (int i = 0; i < dom.n; ++i) putd("domain.hi." + std::to_string(i), dom.hi[i]);
  put("grid.mode", grid.mode == GridMode::radial ? "radial" : "cartesian");
  puti("grid.nr", grid.nr);
  putd("grid.gamma", grid.gamma);
  putd("grid.h", grid.h);
  puti("grid.surf_order", grid.surf_order);
  put("flow.kind", flow_kind);
  put("flow.initial", initial);
  putd("flow.lambda0", lambda0);
  putd("flow.eps", eps);
  put("flow.seed", std::to_string(seed));
  putd("flow.dt_init", fopt.dt_init);
  putd("flow.dt_min", fopt.dt_min);
  putd("flow.dt_max", fopt.dt_max);
  putd("flow.rel_target", fopt.rel_target);
  putd("flow.growth", fopt.growth);
  putd("flow.r_dt_cap", fopt.r_dt_cap);
  puti("flow.max_newton", fopt.max_newton);
  putd("flow.newton_tol", fopt.newton_tol);
  puti("flow.max_rejects", fopt.max_rejects);
  putd("flow.s_end", s_end);
  putd("flow.lambda_stop", lambda_stop);
  puti("flow.max_steps", max_steps);
  putd("flow.steady_m2_tol", steady_m2_tol);
  putd("flow.mass_floor", mass_floor);
  putd("flow.tau_end", tau_end);
  put("fit.enable", fit_enable ? "true" : "false");
  putd("fit.cadence", fit_cadence);
  puti("fit.max_gap", fit_max_gap);
  putd("fit.delta0", fit.delta0);
  puti("fit.max_iter", fit.max_iter);
  putd("fit.tol", fit.tol);
  putd("tolerances.elliptic", elliptic_tol);
  // Observation-only keys (out_dir, checkpoint_every, snapshot_stride, the
  // preset label) stay out: they cannot change the computed trajectory.
  // Snapshot marks stay in because landing on them reshapes the dt sequence.
  for (std::size_t i = 0; i < snapshot_s.size(); ++i)
    putd("output.snapshot_s." + std::to_string(i), snapshot_s[i]);

  std::sort(rows.begin(), rows.end());
  std::string out;
  for (const auto& r : rows) {
    out += r;
    out += '\n';
  }
  return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical_text()); }

void RunConfig::validate() const {
  if (dom.n < 3 || dom.n > kMaxN) throw ConfigError("domain.n must be 3, 4, or 5");
  if (dom.kind == DomainKind::box && grid.mode == GridMode::radial)
    throw ConfigError("radial grids do not apply to box domains");
  if (dom.kind != DomainKind::box) {
    if (!(dom.radius > 0.0)) throw ConfigError("domain.radius must be positive");
    if (dom.kind == DomainKind::annulus && !(dom.inner > 0.0 && dom.inner < dom.radius))
      throw ConfigError("annulus requires 0 < inner < radius");
  } else {
    for (int i = 0; i < dom.n; ++i)
      if (!(dom.lo[i] < dom.hi[i])) throw ConfigError("box requires lo < hi in every axis");
  }
  if (grid.mode == GridMode::radial && grid.nr < 8) throw ConfigError("grid.nr must be >= 8");
  if (grid.mode == GridMode::radial && !(grid.gamma >= 1.0))
    throw ConfigError("grid.gamma must be >= 1");
  if (grid.mode == GridMode::cartesian && !(grid.h > 0.0))
    throw ConfigError("grid.h must be positive");
  if (grid.surf_order < 4) throw ConfigError("grid.surf_order must be >= 4");
  if (flow_kind != "normalized" && flow_kind != "physical")
    throw ConfigError("flow.kind must be normalized or physical");
  if (initial != "dome" && initial != "bubble" && initial != "perturbed-bubble")
    throw ConfigError("flow.initial must be dome, bubble, or perturbed-bubble");
  if (!(lambda0 > 0.0)) throw ConfigError("flow.lambda0 must be positive");
  if (!(eps >= 0.0)) throw ConfigError("flow.eps must be nonnegative");
  if (!(fopt.dt_init > 0.0 && fopt.dt_min > 0.0 && fopt.dt_max >= fopt.dt_min))
    throw ConfigError("flow dt policy requires 0 < dt_min <= dt_max and dt_init > 0");
  if (!(fopt.rel_target > 0.0)) throw ConfigError("flow.rel_target must be positive");
  if (!(fopt.growth > 1.0)) throw ConfigError("flow.growth must exceed 1");
  if (!(fopt.r_dt_cap > 0.0)) throw ConfigError("flow.r_dt_cap must be positive");
  if (fopt.max_newton < 1 || fopt.max_rejects < 1)
    throw ConfigError("flow Newton limits must be positive");
  if (!(fopt.newton_tol > 0.0)) throw ConfigError("flow.newton_tol must be positive");
  if (!(s_end > 0.0)) throw ConfigError("flow.s_end must be positive");
  if (lambda_stop < 0.0) throw ConfigError("flow.lambda_stop must be nonnegative");
  if (max_steps < 1) throw ConfigError("flow.max_steps must be positive");
  if (steady_m2_tol < 0.0) throw ConfigError("flow.steady_m2_tol must be nonnegative");
  if (!(mass_floor > 0.0 && mass_floor < 1.0))
    throw ConfigError("flow.mass_floor must lie in (0, 1)");
  if (tau_end < 0.0) throw ConfigError("flow.tau_end must be nonnegative");
  if (!(fit_cadence > 0.0)) throw ConfigError("fit.cadence must be positive");
  if (fit_max_gap < 1) throw ConfigError("fit.max_gap must be positive");
  if (fit.delta0 < 0.0) throw ConfigError("fit.delta0 must be nonnegative");
  if (fit.max_iter < 1) throw ConfigError("fit.max_iter must be positive");
  if (!(fit.tol > 0.0)) throw ConfigError("fit.tol must be positive");
  if (!(elliptic_tol > 0.0)) throw ConfigError("tolerances.elliptic must be positive");
  if (checkpoint_every < 0) throw ConfigError("output.checkpoint_every must be nonnegative");
  if (snapshot_stride < 0) throw ConfigError("output.snapshot_stride must be nonnegative");
  for (std::size_t i = 0; i < snapshot_s.size(); ++i) {
    if (!(snapshot_s[i] > 0.0)) throw ConfigError("output.snapshot_s marks must be positive");
    if (i > 0 && !(snapshot_s[i] > snapshot_s[i - 1]))
      throw ConfigError("output.snapshot_s marks must increase");
  }
}

std::vector<std::string> preset_names() {
  return {"ball-blowup-n3-radial", "annulus-steady-n3-radial", "ball-extinction-n3-radial"};
}

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "ball-blowup-n3-radial") {
    c.dom.kind = DomainKind::ball;
    c.dom.n = 3;
    c.dom.radius = 1.0;
    c.grid.mode = GridMode::radial;
    c.grid.nr = 1024;
    c.grid.gamma = 2.0;
    c.flow_kind = "normalized";
    c.initial = "perturbed-bubble";
    c.lambda0 = 2.0;
    c.eps = 0.05;
    c.fopt.dt_init = 1e-4;
    c.fopt.dt_max = 0.05;
    c.fopt.rel_target = 5e-4;
    c.s_end = 100.0;
    c.lambda_stop = 50.0;
    c.max_steps = 20000;
    return c;
  }
  if (name == "annulus-steady-n3-radial") {
    c.dom.kind = DomainKind::annulus;
    c.dom.n = 3;
    c.dom.radius = 1.0;
    c.dom.inner = 0.5;
    c.grid.mode = GridMode::radial;
    c.grid.nr = 1024;
    c.flow_kind = "normalized";
    c.initial = "dome";
    c.s_end = 60.0;
    c.lambda_stop = 50.0;
    c.max_steps = 40000;
    c.snapshot_s = {30.0, 60.0};
    return c;
  }
  if (name == "ball-extinction-n3-radial") {
    c.dom.kind = DomainKind::ball;
    c.dom.n = 3;
    c.dom.radius = 1.0;
    c.grid.mode = GridMode::radial;
    c.grid.nr = 2048;
    c.grid.gamma = 2.0;
    c.flow_kind = "physical";
    c.initial = "dome";
    c.fopt.dt_init = 1e-5;
    c.mass_floor = 0.005;
    c.max_steps = 100000;
    c.snapshot_stride = 100;
    c.fit_enable = false;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig c;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line = 0;
  bool any_key = false;
  while (std::getline(is, raw)) {
    ++line;
    std::string s = raw;
    const std::size_t comment = s.find_first_of("#;");
    if (comment != std::string::npos) s = s.substr(0, comment);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(origin, line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "domain" && section != "grid" && section != "flow" && section != "fit" &&
          section != "tolerances" && section != "output" && section != "run")
        fail(origin, line, "unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) fail(origin, line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (key.empty()) fail(origin, line, "empty key");

    const std::string path = section.empty() ? key : section + "." + key;
    if (path == "run.preset" || path == "preset") {
      if (any_key) fail(origin, line, "preset must precede other keys");
      c = preset_config(val);
      continue;
    }
    any_key = true;

    if (path == "domain.kind") c.dom.kind = parse_kind(val, origin, line);
    else if (path == "domain.n") c.dom.n = static_cast<int>(parse_int(val, origin, line));
    else if (path == "domain.radius") c.dom.radius = parse_double(val, origin, line);
    else if (path == "domain.inner") c.dom.inner = parse_double(val, origin, line);
    else if (path == "domain.lo" || path == "domain.hi") {
      const std::vector<double> xs = parse_list(val, origin, line);
      if (xs.empty() || xs.size() > static_cast<std::size_t>(kMaxN))
        fail(origin, line, "expected 1.." + std::to_string(kMaxN) + " coordinates");
      auto& dst = path == "domain.lo" ? c.dom.lo : c.dom.hi;
      for (std::size_t i = 0; i < xs.size(); ++i) dst[i] = xs[i];
      for (std::size_t i = xs.size(); i < static_cast<std::size_t>(kMaxN); ++i)
        dst[i] = xs.back();
    } else if (path == "grid.mode") {
      if (val == "radial") c.grid.mode = GridMode::radial;
      else if (val == "cartesian") c.grid.mode = GridMode::cartesian;
      else fail(origin, line, "grid.mode must be radial or cartesian");
    } else if (path == "grid.nr") c.grid.nr = parse_int(val, origin, line);
    else if (path == "grid.gamma") c.grid.gamma = parse_double(val, origin, line);
    else if (path == "grid.h") c.grid.h = parse_double(val, origin, line);
    else if (path == "grid.surf_order")
      c.grid.surf_order = static_cast<int>(parse_int(val, origin, line));
    else if (path == "flow.kind") c.flow_kind = val;
    else if (path == "flow.initial") c.initial = val;
    else if (path == "flow.lambda0") c.lambda0 = parse_double(val, origin, line);
    else if (path == "flow.eps") c.eps = parse_double(val, origin, line);
    else if (path == "flow.seed") c.seed = parse_u64(val, origin, line);
    else if (path == "flow.dt_init") c.fopt.dt_init = parse_double(val, origin, line);
    else if (path == "flow.dt_min") c.fopt.dt_min = parse_double(val, origin, line);
    else if (path == "flow.dt_max") c.fopt.dt_max = parse_double(val, origin, line);
    else if (path == "flow.rel_target") c.fopt.rel_target = parse_double(val, origin, line);
    else if (path == "flow.growth") c.fopt.growth = parse_double(val, origin, line);
    else if (path == "flow.r_dt_cap") c.fopt.r_dt_cap = parse_double(val, origin, line);
    else if (path == "flow.max_newton")
      c.fopt.max_newton = static_cast<int>(parse_int(val, origin, line));
    else if (path == "flow.newton_tol") c.fopt.newton_tol = parse_double(val, origin, line);
    else if (path == "flow.max_rejects")
      c.fopt.max_rejects = static_cast<int>(parse_int(val, origin, line));
    else if (path == "flow.s_end") c.s_end = parse_double(val, origin, line);
    else if (path == "flow.lambda_stop") c.lambda_stop = parse_double(val, origin, line);
    else if (path == "flow.max_steps") c.max_steps = parse_int(val, origin, line);
    else if (path == "flow.steady_m2_tol") c.steady_m2_tol = parse_double(val, origin, line);
    else if (path == "flow.mass_floor") c.mass_floor = parse_double(val, origin, line);
    else if (path == "flow.tau_end") c.tau_end = parse_double(val, origin, line);
    else if (path == "fit.enable") c.fit_enable = parse_bool(val, origin, line);
    else if (path == "fit.cadence") c.fit_cadence = parse_double(val, origin, line);
    else if (path == "fit.max_gap") c.fit_max_gap = parse_int(val, origin, line);
    else if (path == "fit.delta0") c.fit.delta0 = parse_double(val, origin, line);
    else if (path == "fit.max_iter")
      c.fit.max_iter = static_cast<int>(parse_int(val, origin, line));
    else if (path == "fit.tol") c.fit.tol = parse_double(val, origin, line);
    else if (path == "tolerances.elliptic") c.elliptic_tol = parse_double(val, origin, line);
    else if (path == "output.dir") c.out_dir = val;
    else if (path == "output.checkpoint_every") c.checkpoint_every = parse_int(val, origin, line);
    else if (path == "output.snapshot_stride") c.snapshot_stride = parse_int(val, origin, line);
    else if (path == "output.snapshot_s") c.snapshot_s = parse_list(val, origin, line);
    else fail(origin, line, "unknown key '" + key + "' in [" + section + "]");
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace ylab

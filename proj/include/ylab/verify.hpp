// Verification suites: quantitative checks with pinned bounds, grouped into
// named suites and summarized as the A1..A9 acceptance lines.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ylab {

struct VerifyCheck {
  std::string name;  // suite/check
  std::string tag;   // acceptance line this check belongs to (A1..A9)
  double measured = 0.0;
  double lo = 0.0;  // pass iff lo <= measured <= hi; NaN measured fails
  double hi = 0.0;
  bool pass = false;
  std::string note;
};

struct VerifySuite {
  std::string name;
  std::vector<VerifyCheck> checks;
  double seconds = 0.0;
  bool passed() const;
};

std::vector<std::string> verify_suite_names();

// Runs one suite, streaming one line per check to log.
VerifySuite run_verify_suite(const std::string& name, std::ostream& log);

// Runs "all" or a single suite; prints per-check lines and a summary. Does
// not throw on failed checks; callers inspect the results.
std::vector<VerifySuite> run_verify(const std::string& which, std::ostream& log);

bool all_passed(const std::vector<VerifySuite>& suites);
std::string verify_json(const std::vector<VerifySuite>& suites);

// Acceptance rollup: one line per tag, pass iff every check with the tag
// passed, ran = false when no executed suite carries the tag.
struct AcceptanceLine {
  std::string tag;
  std::string title;
  bool ran = false;
  bool pass = false;
};
std::vector<AcceptanceLine> acceptance_summary(const std::vector<VerifySuite>& suites);

}  // namespace ylab

#pragma once

// Command-line front end. `run` is the whole program minus process exit so
// tests can drive it with argv vectors and string streams.
//
// Commands: forms-verify, descent-verify, orbit-scan, flux-scan,
// adapted-check, wadsley-demo, report.
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace eulerlab::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

struct CheckResult {
  std::string id;
  std::string description;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string anchor;
  bool gating = true;  // counts towards the exit code
};

struct RunConfig {
  std::string command;
  std::optional<double> tol;    // replaces every default tolerance
  std::optional<int> samples;   // per-command default when unset
  std::uint64_t seed = 20240601;
  std::string out;              // empty: data goes to stdout (if a format is set)
  std::string format;           // "", "csv" or "json"
  int grid_s = 200;
  int grid_theta = 400;
  std::vector<double> u_values{0.5, 0.25, 0.1, 0.05};
  std::vector<std::pair<double, double>> s_intervals{{0.5, 0.3}, {0.5, 0.05}};
  int quad_nodes = 64;
  int gamma_min = -2;
  int gamma_max = 2;
  bool allow_bad_set = false;
  bool broken_field = false;
  bool refine = false;
  bool as_gate = false;
  std::string metric = "perturbed";  // wadsley-demo: perturbed | round
  double perturbation = 0.1;
};

using Cell = std::variant<double, std::int64_t, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Outcome {
  std::vector<CheckResult> checks;
  Table data;                      // command-specific rows (may be empty)
  std::vector<std::string> notes;  // extra human-readable lines
};

Outcome forms_verify(const RunConfig& cfg);
Outcome descent_verify(const RunConfig& cfg);
Outcome orbit_scan(const RunConfig& cfg);
Outcome flux_scan(const RunConfig& cfg);
Outcome adapted_check(const RunConfig& cfg);
Outcome wadsley_demo(const RunConfig& cfg);

/// 0 iff every gating check passes.
int exit_code(const std::vector<CheckResult>& checks);

std::string to_csv(const Table& table);
std::string checks_csv(const std::vector<CheckResult>& checks);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eulerlab::cli

#pragma once

// Pipeline orchestration behind the command-line tool: one run reads a
// scenario, executes a mode and writes its CSV artifacts into a directory.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hcng/netmodel.hpp"
#include "hcng/robust.hpp"

namespace hcng {

enum class RunMode { Independent, Cooperative, Robust, OracleSuite };

const char* to_string(RunMode m);
RunMode parse_mode(const std::string& text);  // independent | cooperative | robust | oracle-suite

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitSolver = 3, kExitNonConvergence = 4 };

struct RunConfig {
  std::string scenario;  // file path, or the name of a bundled scenario
  RunMode mode = RunMode::Cooperative;
  std::optional<UncertaintyCase> uncertainty;  // robust and oracle-suite; default case4
  std::optional<ModelVariant> variant;         // default: as in the scenario file
  std::string out_dir = "out";
  std::vector<std::string> overrides;  // "section.key=value" on the scenario document
  std::uint64_t seed = 0;              // recorded only: every tie-break is deterministic
  bool emit_trace = false;
};

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  std::vector<std::string> files;
};

// Bundled scenario name or path to a file.
std::string resolve_scenario_path(const std::string& name_or_path);

// Applies "a.b.c=value" edits to the serialized scenario and re-validates.
// value is read as JSON when it parses, otherwise as a string.  Unknown
// sections or keys are rejected.
Scenario apply_overrides(const Scenario& s, const std::vector<std::string>& overrides);

// Checks mode/variant combinations and the output directory.  Throws ValidationError.
void validate_config(const RunConfig& c);

// Runs the pipeline; failures are reported through the exit code and message,
// never thrown.
RunResult run(const RunConfig& c);

// Side-by-side table of the summaries of two or more run directories
// (comparison.csv) plus per-period profiles (profiles.csv).  Refuses runs
// with different schema versions.
std::vector<std::string> compare_runs(const std::vector<std::string>& run_dirs, const std::string& out_dir);

}  // namespace hcng

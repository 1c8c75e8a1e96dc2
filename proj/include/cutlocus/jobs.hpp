#pragma once

#include "cutlocus/geodesic_flow.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace cutlocus {

// One batch job: {"command", "manifold", "data", "params", "out"}.
struct JobSpec {
  std::string command;
  nlohmann::json manifold;  // null for commands that do not need one
  nlohmann::json data;      // boundary data, null means g = 0
  nlohmann::json params = nlohmann::json::object();
  std::string out_dir;
};

const std::vector<std::string>& job_commands();

// Throws ConfigError on unknown keys, unknown commands or malformed fields.
JobSpec parse_job(const nlohmann::json& doc);
JobSpec load_job(const std::string& path);

// {"kind": "zero"}, {"kind": "constants", "a": [...]} or
// {"kind": "fourier", "components": [{"mean": c, "cos": [...], "sin": [...]}, ...]}
// where component i gets g(s) = mean + sum_k cos[k-1] cos(k s) + sin[k-1] sin(k s).
BoundaryData boundary_data_from_json(const nlohmann::json& doc, int components);

struct RunSettings {
  int threads = 0;
  double tol = 0.0;  // 0 keeps the command's default tolerance
};

struct JobOutcome {
  std::vector<std::string> artifacts;  // file names relative to the output directory
  nlohmann::json summary;
};

// Runs the job and writes its artifacts. Throws on failure.
JobOutcome run_job(const JobSpec& job, const RunSettings& settings);

// run_job with the exit status convention: 0 success, 2 configuration error,
// 3 numerical failure (a diagnostic.json is written to the output directory).
int run_job_guarded(const JobSpec& job, const RunSettings& settings, std::ostream& out, std::ostream& err);

}  // namespace cutlocus

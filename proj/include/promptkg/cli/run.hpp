#pragma once
// Experiment dispatch. Each run validates its configuration, creates a fresh
// directory <out>/<command>-<UTC timestamp>[-n], and writes there:
//
//   config.txt    resolved configuration snapshot
//   report.json   machine-readable report (no timings)
//   report.txt    the same as text, with the results table
//   results.csv   the results table
//   timing.txt    wall time and start timestamp
//
// plus command-specific artifacts. Every file except those whose name
// contains "timing" is byte-identical across reruns of a scripted
// configuration.

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptkg/cli/config.hpp"

namespace promptkg::cli {

enum ExitCode { kExitOk = 0, kExitFailed = 1, kExitInvalid = 2 };

struct RunOutcome {
    int exit_code = kExitOk;
    std::filesystem::path dir;  // empty when validation failed
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    nlohmann::json report;
};

// Never throws for run-time failures: they are recorded in the report and
// yield kExitFailed. Validation failures are all listed in `errors` with
// kExitInvalid and nothing is written.
RunOutcome run(const std::string& command, const RunConfig& cfg, std::ostream& log);

// <root>/<command>-YYYYmmddTHHMMSSZ, with -2, -3, ... appended until unused.
std::filesystem::path fresh_run_dir(const std::filesystem::path& root, const std::string& command,
                                    std::chrono::system_clock::time_point now);

// Reads one positive integer rank per line; '#' starts a comment.
std::vector<std::int64_t> load_ranks(const std::filesystem::path& path);

}  // namespace promptkg::cli

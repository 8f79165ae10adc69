#pragma once

#include <string>

namespace topoderiv {

/// Parsed command line of the `topoderiv` tool.
struct RunOptions {
    std::string command;  ///< expand | sweep | verify | correctors | polarisation
    std::string config_path;
    std::string out_dir = ".";
    std::string cache_dir;  ///< empty disables the corrector cache
    int jobs = 1;           ///< concurrent oracle solves (sweep and verify)
};

/// Runs one command end to end: parses the config, executes the pipeline,
/// writes the CSV/SVG artifacts plus report.txt into out_dir, and mirrors
/// the report to stdout. Returns 0 iff every check line passed, 1 when a
/// check failed, and 2 on configuration or runtime errors (reported on
/// stderr).
int run_command(const RunOptions& opts);

}  // namespace topoderiv

#pragma once

#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "qtorus/run_config.hpp"

namespace qtorus {

inline constexpr const char* kVersion = "1.0.0";

struct RunOutcome {
    std::filesystem::path output_dir;
    std::vector<std::filesystem::path> files;  // written artifacts, in order
    std::vector<std::string> report;           // human-readable summary lines
};

// Executes cfg's subcommand and writes CSV tables, gnuplot scripts, the
// canonical config and manifest.json. Throws qtorus errors.
RunOutcome run(const RunConfig& cfg);

// Wraps run(): prints the report to `out`, and on failure prints a JSON error
// record to `err` (and error.json in the output directory when possible).
int run_main(const RunConfig& cfg, std::ostream& out, std::ostream& err);

std::string error_record_json(const std::exception& e);
int exit_code_for(const std::exception& e);

std::filesystem::path resolve_output_dir(const RunConfig& cfg);

}  // namespace qtorus

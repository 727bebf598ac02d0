#pragma once

#include <filesystem>
#include <iosfwd>

namespace rses::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInvalidArguments = 2,
  kNumericalFailure = 3,
  kIoError = 4,
};

/// `run`, `ablate` and `report` subcommands; returns the process exit code.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Where `run --out PATH` writes the aggregate next to the per-evaluation traces.
std::filesystem::path aggregate_path_for(const std::filesystem::path& out);

}  // namespace rses::cli

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "abx/config.hpp"

namespace abx::cli {

struct CliInvocation {
  std::string subcommand;  // coverage | goal | entropy | demo
  std::optional<std::filesystem::path> config_path;
  std::vector<std::string> overrides;  // key=value, applied after the file
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> base_seed;
  std::optional<int> runs;
  std::optional<int> episodes;
  std::optional<std::vector<Method>> methods;
  std::optional<std::vector<GridPos>> endpoints;
  int jobs = 0;  // 0 = all hardware threads, capped at the run count
};

/// Thrown when the user asked for --help; carries the text to print.
struct HelpRequested {
  std::string text;
};

/// Parses argv (without the program name). Throws UsageError on unknown
/// flags or malformed values, HelpRequested for -h/--help.
CliInvocation parse_invocation(const std::vector<std::string>& args);

/// Loads the config file, applies --set overrides then dedicated flags, and
/// fills in per-subcommand method defaults.
LabConfig resolve_config(const CliInvocation& invocation);

/// Executes the experiment; returns the process exit status.
int run(const CliInvocation& invocation);

/// Full entry point: parse, run, report errors on stderr.
int main(int argc, char** argv);

}  // namespace abx::cli

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "abx/harness.hpp"

namespace abx {

/// Everything a run needs, assembled from built-in defaults, an optional
/// key=value file, and override strings. Defaults follow the 40x40 grid,
/// 200-step episodes, 100 runs, record-every-10 setup.
struct LabConfig {
  EnvConfig env;
  AgentConfig agent;
  ExperimentSpec experiment;
  bool write_update_logs = true;

  // raw switch; finalize() turns it into agent.state_channel
  bool balance_augment_channel = false;

  void finalize();
};

LabConfig default_config();

/// One "key=value" assignment; `source` names the origin for error messages
/// (e.g. "config.txt:3" or "override"). Unknown key or bad value raises
/// ConfigError naming that source.
void apply_config_entry(LabConfig& cfg, std::string_view key,
                        std::string_view value, const std::string& source);

/// Plain-text config: one key=value per line, '#' starts a comment, blank
/// lines ignored. Overrides apply after the file.
LabConfig load_config(const std::optional<std::filesystem::path>& path,
                      std::span<const std::string> overrides);

std::vector<Method> parse_method_list(std::string_view csv,
                                      const std::string& source);
std::vector<GridPos> parse_endpoint_list(std::string_view text,
                                         const std::string& source);

}  // namespace abx

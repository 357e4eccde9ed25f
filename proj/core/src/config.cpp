#include "abx/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>

namespace abx {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void bad_value(const std::string& source, std::string_view key,
                            std::string_view value, const char* expected) {
  throw ConfigError(source + ": cannot parse value '" + std::string(value) +
                    "' for key '" + std::string(key) + "' (expected " +
                    expected + ")");
}

long parse_int(std::string_view key, std::string_view value,
               const std::string& source) {
  long out = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    bad_value(source, key, value, "integer");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value,
                  const std::string& source) {
  // from_chars for doubles is incomplete on some toolchains; strtod is fine
  const std::string tmp(value);
  char* end = nullptr;
  const double out = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || tmp.empty()) {
    bad_value(source, key, value, "real");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value,
                const std::string& source) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(source, key, value, "boolean");
}

}  // namespace

std::vector<Method> parse_method_list(std::string_view csv,
                                      const std::string& source) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string_view item =
        trim(csv.substr(start, comma == std::string_view::npos ? csv.size() - start
                                                               : comma - start));
    if (!item.empty()) {
      const auto m = parse_method(item);
      if (!m) {
        throw ConfigError(source + ": unknown method '" + std::string(item) +
                          "' (expected random, rnd, ab/action_balance, "
                          "ab_rnd/action_balance_rnd)");
      }
      out.push_back(*m);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError(source + ": empty method list");
  return out;
}

std::vector<GridPos> parse_endpoint_list(std::string_view text,
                                         const std::string& source) {
  std::vector<GridPos> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t semi = text.find(';', start);
    const std::string_view item =
        trim(text.substr(start, semi == std::string_view::npos
                                    ? text.size() - start
                                    : semi - start));
    if (!item.empty()) {
      const std::size_t comma = item.find(',');
      if (comma == std::string_view::npos) {
        throw ConfigError(source + ": endpoint '" + std::string(item) +
                          "' is not of the form x,y");
      }
      GridPos p;
      p.x = static_cast<int>(parse_int("endpoint.x", trim(item.substr(0, comma)), source));
      p.y = static_cast<int>(parse_int("endpoint.y", trim(item.substr(comma + 1)), source));
      out.push_back(p);
    }
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  if (out.empty()) throw ConfigError(source + ": empty endpoint list");
  return out;
}

LabConfig default_config() {
  LabConfig cfg;
  // Table-I endpoints
  cfg.experiment.endpoints = {{0, 20}, {20, 0}, {10, 20}, {16, 16}, {20, 10}};
  return cfg;
}

void LabConfig::finalize() {
  if (balance_augment_channel) {
    ActionEmbeddingScheme channel = agent.embedding;
    channel.kind = EmbeddingKind::action_channel;
    agent.state_channel = channel;
  } else {
    agent.state_channel.reset();
  }
  env.validate();
  agent.validate();
}

void apply_config_entry(LabConfig& cfg, std::string_view key,
                        std::string_view value, const std::string& source) {
  key = trim(key);
  value = trim(value);

  if (key == "grid.width") cfg.env.width = static_cast<int>(parse_int(key, value, source));
  else if (key == "grid.height") cfg.env.height = static_cast<int>(parse_int(key, value, source));
  else if (key == "grid.start_x") cfg.env.start.x = static_cast<int>(parse_int(key, value, source));
  else if (key == "grid.start_y") cfg.env.start.y = static_cast<int>(parse_int(key, value, source));
  else if (key == "grid.max_episode_len") cfg.env.max_episode_len = static_cast<int>(parse_int(key, value, source));
  else if (key == "agent.gamma") cfg.agent.gamma = parse_real(key, value, source);
  else if (key == "agent.gae_lambda") cfg.agent.gae_lambda = parse_real(key, value, source);
  else if (key == "agent.clip_epsilon") cfg.agent.clip_epsilon = parse_real(key, value, source);
  else if (key == "agent.rollout_len") cfg.agent.rollout_len = static_cast<int>(parse_int(key, value, source));
  else if (key == "agent.epochs_per_update") cfg.agent.epochs_per_update = static_cast<int>(parse_int(key, value, source));
  else if (key == "agent.learning_rate") cfg.agent.learning_rate = parse_real(key, value, source);
  else if (key == "agent.entropy_coef") cfg.agent.entropy_coef = parse_real(key, value, source);
  else if (key == "agent.value_coef") cfg.agent.value_coef = parse_real(key, value, source);
  else if (key == "agent.normalize_advantages") cfg.agent.normalize_advantages = parse_bool(key, value, source);
  else if (key == "agent.record_target_prob") cfg.agent.record_target_prob = parse_bool(key, value, source);
  else if (key == "distill.learning_rate") cfg.agent.distill_learning_rate = parse_real(key, value, source);
  else if (key == "distill.hidden_dim") cfg.agent.hidden_dim = static_cast<int>(parse_int(key, value, source));
  else if (key == "distill.hidden_layers") cfg.agent.hidden_layers = static_cast<int>(parse_int(key, value, source));
  else if (key == "distill.embedding_dim") cfg.agent.embedding_dim = static_cast<int>(parse_int(key, value, source));
  else if (key == "distill.optimizer") {
    if (value == "adam") cfg.agent.optimizer = OptimizerKind::adam;
    else if (value == "sgd") cfg.agent.optimizer = OptimizerKind::sgd;
    else bad_value(source, key, value, "adam or sgd");
  } else if (key == "novelty.variant") {
    if (value == "tabular") cfg.agent.novelty_variant = NoveltyVariant::tabular;
    else if (value == "neural") cfg.agent.novelty_variant = NoveltyVariant::neural;
    else bad_value(source, key, value, "tabular or neural");
  } else if (key == "novelty.running_std") {
    cfg.agent.novelty_running_std = parse_bool(key, value, source);
  } else if (key == "balance.embedding") {
    if (value == "one_hot") cfg.agent.embedding.kind = EmbeddingKind::one_hot;
    else if (value == "action_channel") cfg.agent.embedding.kind = EmbeddingKind::action_channel;
    else bad_value(source, key, value, "one_hot or action_channel");
  } else if (key == "balance.channel_rows") {
    cfg.agent.embedding.channel_rows = static_cast<int>(parse_int(key, value, source));
  } else if (key == "balance.channel_cols") {
    cfg.agent.embedding.channel_cols = static_cast<int>(parse_int(key, value, source));
  } else if (key == "balance.pad_value") {
    cfg.agent.embedding.pad_value = parse_real(key, value, source);
  } else if (key == "balance.normalize") {
    if (value == "per_vector") cfg.agent.normalize_mode = NormalizeMode::per_vector;
    else if (value == "running") cfg.agent.normalize_mode = NormalizeMode::running;
    else bad_value(source, key, value, "per_vector or running");
  } else if (key == "balance.augment_channel") {
    cfg.balance_augment_channel = parse_bool(key, value, source);
  } else if (key == "experiment.runs") {
    cfg.experiment.runs = static_cast<int>(parse_int(key, value, source));
  } else if (key == "experiment.episodes") {
    cfg.experiment.episodes = static_cast<int>(parse_int(key, value, source));
  } else if (key == "experiment.record_every") {
    cfg.experiment.record_every = static_cast<int>(parse_int(key, value, source));
  } else if (key == "experiment.methods") {
    cfg.experiment.methods = parse_method_list(value, source);
  } else if (key == "experiment.goal_step_cap") {
    cfg.experiment.goal_step_cap = parse_int(key, value, source);
  } else if (key == "experiment.allow_censored") {
    cfg.experiment.allow_censored = parse_bool(key, value, source);
  } else if (key == "goal.endpoints") {
    cfg.experiment.endpoints = parse_endpoint_list(value, source);
  } else if (key == "io.write_update_logs") {
    cfg.write_update_logs = parse_bool(key, value, source);
  } else {
    throw ConfigError(source + ": unknown key '" + std::string(key) + "'");
  }
}

LabConfig load_config(const std::optional<std::filesystem::path>& path,
                      std::span<const std::string> overrides) {
  LabConfig cfg = default_config();

  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file " + path->string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string_view sv = line;
      const std::size_t hash = sv.find('#');
      if (hash != std::string_view::npos) sv = sv.substr(0, hash);
      sv = trim(sv);
      if (sv.empty()) continue;
      const std::string source = path->filename().string() + ":" + std::to_string(line_no);
      const std::size_t eq = sv.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(source + ": expected key=value, got '" +
                          std::string(sv) + "'");
      }
      apply_config_entry(cfg, sv.substr(0, eq), sv.substr(eq + 1), source);
    }
  }

  for (const std::string& ov : overrides) {
    const std::size_t eq = ov.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override '" + ov + "' is not of the form key=value");
    }
    apply_config_entry(cfg, std::string_view(ov).substr(0, eq),
                       std::string_view(ov).substr(eq + 1), "override");
  }

  cfg.finalize();
  return cfg;
}

}  // namespace abx

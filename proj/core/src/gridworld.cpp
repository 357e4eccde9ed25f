#include "abx/gridworld.hpp"

namespace abx {

void EnvConfig::validate() const {
  if (width < 1 || height < 1) throw ConfigError("grid dimensions must be >= 1");
  if (max_episode_len < 1) throw ConfigError("max_episode_len must be >= 1");
  if (!contains(start)) throw ConfigError("start position outside the grid");
  if (goal && !contains(*goal)) throw ConfigError("goal position outside the grid");
}

GridWorld::GridWorld(const EnvConfig& config) : config_(config) {
  config_.validate();
}

GridPos GridWorld::reset() {
  pos_ = config_.start;
  steps_in_episode_ = 0;
  started_ = true;
  done_ = false;
  return pos_;
}

GridPos GridWorld::state() const {
  if (!started_) throw UsageError("environment used before reset");
  return pos_;
}

StepResult GridWorld::step(int action) {
  if (!started_) throw UsageError("step before reset");
  if (done_) throw UsageError("step after episode end; call reset");
  if (action < 0 || action >= kNumActions) {
    throw UsageError("action index " + std::to_string(action) +
                     " outside [0, " + std::to_string(kNumActions) + ")");
  }

  GridPos next = pos_;
  switch (action) {
    case 0: next.y += 1; break;
    case 1: next.y -= 1; break;
    case 2: next.x -= 1; break;
    case 3: next.x += 1; break;
  }
  // clip: an off-grid move leaves the position unchanged on that axis
  if (!config_.contains(next)) next = pos_;

  pos_ = next;
  ++steps_in_episode_;
  const bool at_goal = config_.goal && pos_ == *config_.goal;
  done_ = at_goal || steps_in_episode_ >= config_.max_episode_len;

  return StepResult{pos_, 0.0, done_, steps_in_episode_};
}

int state_index(GridPos pos, const EnvConfig& config) {
  return pos.y * config.width + pos.x;
}

GridPos pos_from_index(int index, const EnvConfig& config) {
  return GridPos{index % config.width, index / config.width};
}

std::array<double, 2> state_features(GridPos pos, const EnvConfig& config) {
  return {static_cast<double>(pos.x) / config.width,
          static_cast<double>(pos.y) / config.height};
}

}  // namespace abx

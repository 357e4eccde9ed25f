#pragma once

#include <array>
#include <optional>
#include <string>

#include "abx/errors.hpp"

namespace abx {

struct GridPos {
  int x = 0;
  int y = 0;
  bool operator==(const GridPos&) const = default;
};

/// Reward-free deterministic grid. The goal, when present, only terminates
/// the episode; it never pays reward.
struct EnvConfig {
  int width = 40;
  int height = 40;
  GridPos start{0, 0};
  int max_episode_len = 200;
  std::optional<GridPos> goal;

  void validate() const;  // ConfigError if start/goal outside or sizes < 1
  bool contains(GridPos p) const {
    return p.x >= 0 && p.x < width && p.y >= 0 && p.y < height;
  }
};

struct StepResult {
  GridPos next_state;
  double reward = 0.0;  // external reward, always 0 in this environment
  bool done = false;
  int info_steps_in_episode = 0;
};

/// Actions: 0 up (y+1), 1 down (y-1), 2 left (x-1), 3 right (x+1).
/// Moves off the grid clip in place.
inline constexpr int kNumActions = 4;
inline constexpr std::array<const char*, kNumActions> kActionNames = {
    "up", "down", "left", "right"};

class GridWorld {
 public:
  explicit GridWorld(const EnvConfig& config);

  GridPos reset();
  StepResult step(int action);

  const EnvConfig& config() const { return config_; }
  GridPos state() const;            // UsageError before first reset
  bool started() const { return started_; }
  bool episode_done() const { return done_; }
  int steps_in_episode() const { return steps_in_episode_; }

 private:
  EnvConfig config_;
  GridPos pos_{};
  int steps_in_episode_ = 0;
  bool started_ = false;
  bool done_ = false;
};

/// Row-major cell index: (x, y) -> y * width + x.
int state_index(GridPos pos, const EnvConfig& config);
GridPos pos_from_index(int index, const EnvConfig& config);

/// Network observation for a grid state: (x/width, y/height).
std::array<double, 2> state_features(GridPos pos, const EnvConfig& config);

}  // namespace abx

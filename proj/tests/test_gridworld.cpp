#include "abx/gridworld.hpp"

#include <doctest.h>

#include "abx/random.hpp"

using namespace abx;

TEST_CASE("reset returns the configured start") {
  GridWorld env{EnvConfig{}};
  CHECK(env.reset() == GridPos{0, 0});

  EnvConfig cfg;
  cfg.start = {5, 5};
  GridWorld env2{cfg};
  CHECK(env2.reset() == GridPos{5, 5});
  CHECK(env2.reset() == GridPos{5, 5});  // reset is idempotent
}

TEST_CASE("moves and boundary clipping") {
  GridWorld env{EnvConfig{}};
  env.reset();
  // at (0,0): left clips, reward 0, not done
  StepResult r = env.step(2);
  CHECK(r.next_state == GridPos{0, 0});
  CHECK(r.reward == 0.0);
  CHECK_FALSE(r.done);
  // down also clips
  r = env.step(1);
  CHECK(r.next_state == GridPos{0, 0});
  // right moves
  r = env.step(3);
  CHECK(r.next_state == GridPos{1, 0});
  // up moves
  r = env.step(0);
  CHECK(r.next_state == GridPos{1, 1});
  CHECK(r.info_steps_in_episode == 4);
}

TEST_CASE("goal contact terminates the episode with zero reward") {
  EnvConfig cfg;
  cfg.goal = GridPos{0, 20};
  GridWorld env{cfg};
  env.reset();
  StepResult r{};
  for (int i = 0; i < 19; ++i) r = env.step(0);
  CHECK(r.next_state == GridPos{0, 19});
  CHECK_FALSE(r.done);
  r = env.step(0);
  CHECK(r.next_state == GridPos{0, 20});
  CHECK(r.done);
  CHECK(r.reward == 0.0);  // the goal pays nothing; it only ends the episode
  CHECK_THROWS_AS(env.step(0), UsageError);
}

TEST_CASE("without a goal, done fires exactly at max_episode_len") {
  EnvConfig cfg;
  cfg.max_episode_len = 7;
  GridWorld env{cfg};
  env.reset();
  for (int i = 0; i < 6; ++i) CHECK_FALSE(env.step(3).done);
  CHECK(env.step(3).done);
}

TEST_CASE("usage errors: bad action, step before reset, step after done") {
  GridWorld env{EnvConfig{}};
  CHECK_THROWS_AS(env.step(0), UsageError);
  CHECK_THROWS_AS(env.state(), UsageError);
  env.reset();
  CHECK_THROWS_AS(env.step(4), UsageError);
  CHECK_THROWS_AS(env.step(-1), UsageError);
}

TEST_CASE("random walks stay inside the grid and pay zero reward") {
  EnvConfig cfg;
  cfg.max_episode_len = 50;
  GridWorld env{cfg};
  Rng rng(99);
  for (int episode = 0; episode < 20; ++episode) {
    env.reset();
    while (!env.episode_done()) {
      const StepResult r = env.step(static_cast<int>(rng.below(4)));
      CHECK(cfg.contains(r.next_state));
      CHECK(r.reward == 0.0);
      CHECK(r.info_steps_in_episode <= cfg.max_episode_len);
    }
    CHECK(env.steps_in_episode() == cfg.max_episode_len);
  }
}

TEST_CASE("state_index is the row-major bijection") {
  const EnvConfig cfg;
  CHECK(state_index({0, 0}, cfg) == 0);
  CHECK(state_index({39, 39}, cfg) == 1599);
  for (int i = 0; i < cfg.width * cfg.height; ++i) {
    CHECK(state_index(pos_from_index(i, cfg), cfg) == i);
  }
}

TEST_CASE("state features scale coordinates into [0,1)") {
  const EnvConfig cfg;
  const auto f = state_features({20, 10}, cfg);
  CHECK(f[0] == doctest::Approx(0.5));
  CHECK(f[1] == doctest::Approx(0.25));
}

TEST_CASE("invalid configurations are rejected") {
  EnvConfig cfg;
  cfg.width = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.start = {40, 0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.goal = GridPos{0, 40};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.max_episode_len = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

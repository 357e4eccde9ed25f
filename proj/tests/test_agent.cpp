#include "abx/agent.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace abx;

namespace {

AgentConfig base_config(Method m, std::uint64_t seed = 0) {
  AgentConfig cfg;
  cfg.method = m;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("method parsing accepts aliases") {
  CHECK(parse_method("random") == Method::random);
  CHECK(parse_method("rnd") == Method::rnd);
  CHECK(parse_method("ab") == Method::action_balance);
  CHECK(parse_method("action_balance") == Method::action_balance);
  CHECK(parse_method("ab_rnd") == Method::action_balance_rnd);
  CHECK(parse_method("action_balance_rnd") == Method::action_balance_rnd);
  CHECK_FALSE(parse_method("ppo").has_value());
}

TEST_CASE("method gating controls which modules exist") {
  const EnvConfig env;
  Agent random_agent(base_config(Method::random), env);
  CHECK(random_agent.balancer() == nullptr);
  CHECK(random_agent.novelty() == nullptr);
  CHECK_THROWS_AS(random_agent.policy_logits({0, 0}), UsageError);

  Agent rnd_agent(base_config(Method::rnd), env);
  CHECK(rnd_agent.balancer() == nullptr);
  CHECK(rnd_agent.novelty() != nullptr);

  Agent ab_agent(base_config(Method::action_balance), env);
  CHECK(ab_agent.balancer() != nullptr);
  CHECK(ab_agent.novelty() == nullptr);

  Agent full_agent(base_config(Method::action_balance_rnd), env);
  CHECK(full_agent.balancer() != nullptr);
  CHECK(full_agent.novelty() != nullptr);
}

TEST_CASE("random method samples uniformly with probability exactly 1/k") {
  const EnvConfig env;
  Agent agent(base_config(Method::random, 3), env);
  long counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 20000; ++i) {
    const ActResult ar = agent.act({5, 5});
    CHECK(ar.behavior_prob == 0.25);
    CHECK_FALSE(ar.bonus.has_value());
    ++counts[ar.action];
  }
  for (long c : counts) {
    CHECK(static_cast<double>(c) / 20000.0 == doctest::Approx(0.25).epsilon(0.05));
  }
}

TEST_CASE("balancer methods bias sampling toward the larger bonus") {
  const EnvConfig env;
  Agent agent(base_config(Method::action_balance, 1), env);
  const GridPos s{10, 10};
  // train three of the four actions so one bonus stands out
  const auto farr = state_features(s, env);
  const std::vector<double> feat(farr.begin(), farr.end());
  for (int i = 0; i < 300; ++i) {
    for (int a = 0; a < 3; ++a) {
      std::vector<std::vector<double>> states(1, feat);
      std::vector<int> actions(1, a);
      agent.balancer()->train_step(states, actions, 1e-3);
    }
  }
  const BonusVector v = agent.balancer()->bonus_vector(feat);
  const auto beta =
      mix_policy(agent.policy_logits(s), normalize(v));
  CHECK(v.values[3] > v.values[0]);
  CHECK(beta[3] == *std::max_element(beta.begin(), beta.end()));
}

TEST_CASE("empirical act frequencies match the computed behavior policy") {
  const EnvConfig env;
  Agent agent(base_config(Method::action_balance_rnd, 9), env);
  const GridPos s{7, 3};
  const auto farr = state_features(s, env);
  const std::vector<double> feat(farr.begin(), farr.end());
  const auto expected =
      mix_policy(agent.policy_logits(s),
                 normalize(agent.balancer()->bonus_vector(feat)));

  long counts[4] = {0, 0, 0, 0};
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) {
    const ActResult ar = agent.act(s);
    ++counts[ar.action];
    CHECK(ar.behavior_prob ==
          doctest::Approx(expected[static_cast<std::size_t>(ar.action)]).epsilon(1e-12));
  }
  for (int a = 0; a < 4; ++a) {
    const double freq = static_cast<double>(counts[a]) / samples;
    CHECK(std::abs(freq - expected[static_cast<std::size_t>(a)]) < 0.01);
  }
}

TEST_CASE("one rollout is exactly one episode in the no-goal grid") {
  const EnvConfig env;
  GridWorld world(env);
  Agent agent(base_config(Method::action_balance_rnd, 4), env);
  const auto rollout = agent.collect_rollout(world);
  REQUIRE(rollout.size() == 200);
  int dones = 0;
  for (const auto& tr : rollout) dones += tr.done ? 1 : 0;
  CHECK(dones == 1);
  CHECK(rollout.back().done);
  // behavior probabilities are genuine probabilities
  for (const auto& tr : rollout) {
    CHECK(tr.behavior_prob > 0.0);
    CHECK(tr.behavior_prob <= 1.0);
  }
}

TEST_CASE("combined reward follows the tabular count at visit time") {
  const EnvConfig env;
  GridWorld world(env);
  Agent agent(base_config(Method::rnd, 8), env);

  std::map<int, long> oracle;  // independent counter
  for (int r = 0; r < 3; ++r) {
    const auto rollout = agent.collect_rollout(world);
    for (const auto& tr : rollout) {
      const long n = oracle[state_index(tr.next_state, env)];
      const double expected = 1.0 / std::sqrt(static_cast<double>(n) + 1.0);
      CHECK(tr.combined_reward == doctest::Approx(expected).epsilon(1e-12));
      ++oracle[state_index(tr.next_state, env)];
    }
    agent.update(rollout);
  }
  // the very first transition scored a first visit
  CHECK(oracle.size() > 1);
}

TEST_CASE("random method collects zero reward and reports zero losses") {
  const EnvConfig env;
  GridWorld world(env);
  Agent agent(base_config(Method::random, 2), env);
  const auto rollout = agent.collect_rollout(world);
  for (const auto& tr : rollout) CHECK(tr.combined_reward == 0.0);
  const UpdateReport report = agent.update(rollout);
  CHECK(report.action_balance_loss == 0.0);
  CHECK(report.novelty_loss == 0.0);
  CHECK(report.policy_loss == 0.0);
  CHECK(report.total_loss == 0.0);
  CHECK(std::isnan(report.mean_bonus_entropy));
}

TEST_CASE("total loss is the exact sum of the logged components") {
  const EnvConfig env;
  GridWorld world(env);
  Agent agent(base_config(Method::action_balance_rnd, 6), env);
  for (int i = 0; i < 3; ++i) {
    const auto rollout = agent.collect_rollout(world);
    const UpdateReport report = agent.update(rollout);
    CHECK(report.total_loss ==
          doctest::Approx(report.policy_loss + report.action_balance_loss +
                          report.novelty_loss)
              .epsilon(1e-12));
    CHECK(report.action_balance_loss > 0.0);
    CHECK(report.novelty_loss == 0.0);  // tabular novelty trains no net
    CHECK(report.mean_bonus_entropy > 0.0);
    CHECK(report.mean_bonus_entropy <= std::log(4.0) + 1e-12);
  }
}

TEST_CASE("zero advantages leave the policy untouched unless entropy pushes") {
  const EnvConfig env;

  auto make_zero_value_agent = [&](double entropy_coef) {
    AgentConfig cfg = base_config(Method::action_balance, 12);
    cfg.entropy_coef = entropy_coef;
    Agent agent(cfg, env);
    // zero the value output row so every value estimate and return is 0;
    // with zero external reward and no novelty the advantages vanish
    std::vector<double> params(agent.policy_parameters().begin(),
                               agent.policy_parameters().end());
    const auto layers = layer_shapes(agent.policy_spec());
    const LayerShape& last = layers.back();
    const int value_row = kNumActions;
    for (int i = 0; i < last.in; ++i) {
      params[last.weights + static_cast<std::size_t>(value_row) * last.in + i] = 0.0;
    }
    params[last.bias + static_cast<std::size_t>(value_row)] = 0.0;
    agent.set_policy_parameters(params);
    return agent;
  };

  GridWorld world(env);
  Agent frozen = make_zero_value_agent(0.0);
  const auto rollout = frozen.collect_rollout(world);
  for (const auto& tr : rollout) {
    CHECK(tr.combined_reward == 0.0);
    CHECK(tr.value_estimate == 0.0);
  }
  const std::vector<double> before(frozen.policy_parameters().begin(),
                                   frozen.policy_parameters().end());
  frozen.update(rollout);
  CHECK(std::equal(before.begin(), before.end(),
                   frozen.policy_parameters().begin()));

  GridWorld world2(env);
  Agent regularized = make_zero_value_agent(0.01);
  const auto rollout2 = regularized.collect_rollout(world2);
  const std::vector<double> before2(regularized.policy_parameters().begin(),
                                    regularized.policy_parameters().end());
  regularized.update(rollout2);
  CHECK_FALSE(std::equal(before2.begin(), before2.end(),
                         regularized.policy_parameters().begin()));
}

TEST_CASE("identical config and seed reproduce actions and parameters") {
  const EnvConfig env;
  GridWorld w1(env), w2(env);
  Agent a1(base_config(Method::action_balance_rnd, 77), env);
  Agent a2(base_config(Method::action_balance_rnd, 77), env);
  for (int u = 0; u < 3; ++u) {
    const auto r1 = a1.collect_rollout(w1);
    const auto r2 = a2.collect_rollout(w2);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
      CHECK(r1[i].action == r2[i].action);
      CHECK(r1[i].behavior_prob == r2[i].behavior_prob);
      CHECK(r1[i].combined_reward == r2[i].combined_reward);
    }
    a1.update(r1);
    a2.update(r2);
  }
  CHECK(std::equal(a1.policy_parameters().begin(), a1.policy_parameters().end(),
                   a2.policy_parameters().begin()));
}

TEST_CASE("ppo ratios start finite and tiny clip keeps logits bounded") {
  const EnvConfig env;
  AgentConfig cfg = base_config(Method::rnd, 21);
  cfg.clip_epsilon = 1e-6;
  GridWorld world(env);
  Agent agent(cfg, env);
  const auto rollout = agent.collect_rollout(world);

  // epoch-0 ratio: pi(a|s)/behavior_prob from the still-unchanged policy
  for (const auto& tr : rollout) {
    const auto pi = softmax(agent.policy_logits(tr.state));
    const double ratio = pi[static_cast<std::size_t>(tr.action)] / tr.behavior_prob;
    CHECK(std::isfinite(ratio));
    CHECK(ratio == doctest::Approx(1.0).epsilon(1e-9));  // rnd samples from pi
  }

  std::vector<GridPos> probes{{0, 0}, {5, 5}, {20, 20}, {39, 39}};
  std::vector<std::vector<double>> logits_before;
  for (auto p : probes) logits_before.push_back(agent.policy_logits(p));
  agent.update(rollout);
  double max_delta = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto after = agent.policy_logits(probes[i]);
    for (int j = 0; j < kNumActions; ++j) {
      max_delta = std::max(max_delta,
                           std::abs(after[static_cast<std::size_t>(j)] -
                                    logits_before[i][static_cast<std::size_t>(j)]));
    }
  }
  CHECK(max_delta < 1.0);
}

TEST_CASE("record_target_prob switch stores pi instead of beta") {
  const EnvConfig env;
  AgentConfig cfg = base_config(Method::action_balance_rnd, 31);
  cfg.record_target_prob = true;
  Agent agent(cfg, env);
  const GridPos s{4, 9};
  const auto pi = softmax(agent.policy_logits(s));
  for (int i = 0; i < 50; ++i) {
    const ActResult ar = agent.act(s);
    CHECK(ar.behavior_prob ==
          doctest::Approx(pi[static_cast<std::size_t>(ar.action)]).epsilon(1e-12));
  }
}

TEST_CASE("update rejects an empty rollout") {
  const EnvConfig env;
  Agent agent(base_config(Method::rnd, 1), env);
  const std::vector<Transition> empty;
  CHECK_THROWS_AS(agent.update(empty), UsageError);
}

TEST_CASE("agent config validation") {
  AgentConfig cfg;
  cfg.gamma = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = AgentConfig{};
  cfg.rollout_len = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = AgentConfig{};
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = AgentConfig{};
  cfg.embedding.k = 3;  // grid has 4 actions
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

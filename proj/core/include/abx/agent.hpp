#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "abx/action_balance.hpp"
#include "abx/gridworld.hpp"
#include "abx/novelty.hpp"
#include "abx/random.hpp"

namespace abx {

enum class Method { random, rnd, action_balance, action_balance_rnd };

const char* method_name(Method m);
/// Accepts the full names plus the short aliases "ab" and "ab_rnd".
std::optional<Method> parse_method(std::string_view name);

struct AgentConfig {
  Method method = Method::action_balance_rnd;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  int rollout_len = 200;
  int epochs_per_update = 4;
  double learning_rate = 1e-3;  // policy net
  double entropy_coef = 0.0;
  std::uint64_t seed = 0;

  // PPO plumbing
  double value_coef = 0.5;
  bool normalize_advantages = true;
  // ablation: record pi(a|s) instead of beta(a|s) as the behavior probability
  bool record_target_prob = false;

  // distillation modules
  double distill_learning_rate = 1e-3;
  int hidden_dim = 64;
  int hidden_layers = 2;
  int embedding_dim = 32;
  OptimizerKind optimizer = OptimizerKind::adam;
  NoveltyVariant novelty_variant = NoveltyVariant::tabular;
  bool novelty_running_std = false;
  ActionEmbeddingScheme embedding{EmbeddingKind::one_hot, kNumActions, 8, 4, 1.0};
  std::optional<ActionEmbeddingScheme> state_channel;  // appended when present
  NormalizeMode normalize_mode = NormalizeMode::per_vector;

  void validate() const;
  bool uses_balancer() const {
    return method == Method::action_balance || method == Method::action_balance_rnd;
  }
  bool uses_novelty() const {
    return method == Method::rnd || method == Method::action_balance_rnd;
  }
  bool uses_policy_net() const { return method != Method::random; }
};

struct Transition {
  GridPos state;
  int action = 0;
  double combined_reward = 0.0;  // r' = r + r^i
  GridPos next_state;
  bool done = false;
  double behavior_prob = 1.0;  // probability of the taken action at collection
  double value_estimate = 0.0;
  double bonus_entropy = 0.0;  // NaN when the balancer is inactive
};

struct UpdateReport {
  double policy_loss = 0.0;
  double action_balance_loss = 0.0;
  double novelty_loss = 0.0;
  double total_loss = 0.0;  // exact sum of the three components
  double mean_bonus_entropy = 0.0;
};

struct ActResult {
  int action = 0;
  double behavior_prob = 1.0;
  std::optional<BonusVector> bonus;  // present for balancer methods
};

/// Policy/value learner. One agent per run worker; collect then update,
/// sequentially.
class Agent {
 public:
  Agent(const AgentConfig& config, const EnvConfig& env);

  /// Samples an action: uniform (random), softmax of the policy logits
  /// (rnd), or the bonus-mixed behavior policy (action_balance*).
  ActResult act(GridPos s);

  /// Collects config.rollout_len transitions, auto-resetting episodes,
  /// scoring and observing next-state novelty when that module is active.
  std::vector<Transition> collect_rollout(GridWorld& env);

  /// GAE + clipped-surrogate PPO on the policy, then one gradient pass each
  /// for the balancer (taken state/action pairs) and the novelty pair
  /// (pending next states) when active.
  UpdateReport update(std::span<const Transition> rollout);

  const AgentConfig& config() const { return config_; }
  ActionBalancer* balancer() { return balancer_.get(); }
  const ActionBalancer* balancer() const { return balancer_.get(); }
  NoveltyEstimator* novelty() { return novelty_.get(); }
  const NoveltyEstimator* novelty() const { return novelty_.get(); }

  // policy introspection (UsageError for the random method)
  std::vector<double> policy_logits(GridPos s) const;
  double state_value(GridPos s) const;
  std::span<const double> policy_parameters() const;
  void set_policy_parameters(std::span<const double> params);
  const ApproximatorSpec& policy_spec() const { return policy_spec_; }

 private:
  struct PolicyOut {
    std::vector<double> logits;
    double value = 0.0;
  };
  PolicyOut forward_policy(GridPos s) const;
  double ppo_update(std::span<const Transition> rollout);
  std::array<double, 2> state_features_flat(GridPos s) const;

  AgentConfig config_;
  EnvConfig env_;
  std::unique_ptr<ActionBalancer> balancer_;
  std::unique_ptr<NoveltyEstimator> novelty_;

  // policy net (absent for the random method)
  ApproximatorSpec policy_spec_;
  std::vector<double> policy_params_;
  std::unique_ptr<Optimizer> policy_optimizer_;
  mutable MlpWorkspace policy_ws_;

  Rng action_rng_;
};

}  // namespace abx

#include "abx/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "abx/stats.hpp"

namespace abx {

namespace {
constexpr std::uint64_t kPolicyStream = 101;
constexpr std::uint64_t kBalancerStream = 102;
constexpr std::uint64_t kNoveltyStream = 103;
constexpr std::uint64_t kActionStream = 104;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::random: return "random";
    case Method::rnd: return "rnd";
    case Method::action_balance: return "action_balance";
    case Method::action_balance_rnd: return "action_balance_rnd";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "random") return Method::random;
  if (name == "rnd") return Method::rnd;
  if (name == "ab" || name == "action_balance") return Method::action_balance;
  if (name == "ab_rnd" || name == "action_balance_rnd") {
    return Method::action_balance_rnd;
  }
  return std::nullopt;
}

void AgentConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0,1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw ConfigError("gae_lambda must be in [0,1]");
  }
  if (!(clip_epsilon > 0.0)) throw ConfigError("clip_epsilon must be > 0");
  if (rollout_len < 1) throw ConfigError("rollout_len must be >= 1");
  if (epochs_per_update < 1) throw ConfigError("epochs_per_update must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be a positive finite real");
  }
  if (entropy_coef < 0.0) throw ConfigError("entropy_coef must be >= 0");
  if (value_coef < 0.0) throw ConfigError("value_coef must be >= 0");
  if (!(distill_learning_rate > 0.0)) {
    throw ConfigError("distill_learning_rate must be > 0");
  }
  if (hidden_dim < 1 || hidden_layers < 1 || embedding_dim < 1) {
    throw ConfigError("network dimensions must be >= 1");
  }
  if (embedding.k != kNumActions) {
    throw ConfigError("embedding k must match the grid action space");
  }
  embedding.validate();
  if (state_channel) state_channel->validate();
}

Agent::Agent(const AgentConfig& config, const EnvConfig& env)
    : config_(config), env_(env), action_rng_(mix_seed(config.seed, kActionStream)) {
  config_.validate();
  env_.validate();

  if (config_.uses_policy_net()) {
    policy_spec_.input_dim = 2;
    policy_spec_.hidden_dim = config_.hidden_dim;
    policy_spec_.output_dim = kNumActions + 1;  // k logits + 1 value
    policy_spec_.hidden_layers = config_.hidden_layers;
    policy_spec_.activation = Activation::relu;
    policy_params_.resize(static_cast<std::size_t>(policy_spec_.parameter_count()));
    mlp_init(policy_spec_, mix_seed(config_.seed, kPolicyStream), policy_params_);
    policy_optimizer_ =
        std::make_unique<Optimizer>(config_.optimizer, policy_params_.size());
  }
  if (config_.uses_balancer()) {
    balancer_ = std::make_unique<ActionBalancer>(
        2, config_.embedding, config_.state_channel, config_.hidden_dim,
        config_.hidden_layers, config_.embedding_dim,
        mix_seed(config_.seed, kBalancerStream), config_.optimizer,
        config_.normalize_mode);
  }
  if (config_.uses_novelty()) {
    if (config_.novelty_variant == NoveltyVariant::tabular) {
      novelty_ = std::make_unique<NoveltyEstimator>(NoveltyEstimator::make_tabular(env_));
    } else {
      ApproximatorSpec spec;
      spec.input_dim = 2;
      spec.hidden_dim = config_.hidden_dim;
      spec.output_dim = config_.embedding_dim;
      spec.hidden_layers = config_.hidden_layers;
      novelty_ = std::make_unique<NoveltyEstimator>(NoveltyEstimator::make_neural(
          env_, spec, mix_seed(config_.seed, kNoveltyStream), config_.optimizer,
          config_.novelty_running_std));
    }
  }
}

Agent::PolicyOut Agent::forward_policy(GridPos s) const {
  const auto feat = state_features(s, env_);
  std::vector<double> out(kNumActions + 1);
  mlp_forward(policy_spec_, policy_params_, feat, out, policy_ws_);
  PolicyOut po;
  po.value = out[kNumActions];
  out.resize(kNumActions);
  po.logits = std::move(out);
  return po;
}

ActResult Agent::act(GridPos s) {
  if (!env_.contains(s)) throw UsageError("act: state outside the grid");

  if (config_.method == Method::random) {
    const int a = static_cast<int>(action_rng_.below(kNumActions));
    return ActResult{a, 1.0 / kNumActions, std::nullopt};
  }

  PolicyOut po = forward_policy(s);
  if (config_.method == Method::rnd) {
    const std::vector<double> probs = softmax(po.logits);
    const int a = action_rng_.categorical(probs);
    return ActResult{a, probs[static_cast<std::size_t>(a)], std::nullopt};
  }

  BonusVector bonus = balancer_->bonus_vector(state_features_flat(s), state_index(s, env_));
  const std::vector<double> nb = balancer_->apply_normalize(bonus);
  const std::vector<double> beta = mix_policy(po.logits, nb);
  const int a = action_rng_.categorical(beta);
  const double prob = config_.record_target_prob
                          ? softmax(po.logits)[static_cast<std::size_t>(a)]
                          : beta[static_cast<std::size_t>(a)];
  return ActResult{a, prob, std::move(bonus)};
}

std::vector<Transition> Agent::collect_rollout(GridWorld& env) {
  std::vector<Transition> rollout;
  rollout.reserve(static_cast<std::size_t>(config_.rollout_len));
  if (!env.started() || env.episode_done()) env.reset();

  for (int t = 0; t < config_.rollout_len; ++t) {
    const GridPos s = env.state();
    double value = 0.0;
    double entropy = kNan;
    ActResult ar;
    if (config_.method == Method::random) {
      ar = act(s);
    } else {
      // act() again would redo the policy forward; inline the pieces so the
      // value estimate comes from the same pass
      PolicyOut po = forward_policy(s);
      value = po.value;
      if (config_.method == Method::rnd) {
        const std::vector<double> probs = softmax(po.logits);
        ar.action = action_rng_.categorical(probs);
        ar.behavior_prob = probs[static_cast<std::size_t>(ar.action)];
      } else {
        BonusVector bonus =
            balancer_->bonus_vector(state_features_flat(s), state_index(s, env_));
        entropy = bonus_entropy(bonus);
        const std::vector<double> nb = balancer_->apply_normalize(bonus);
        const std::vector<double> beta = mix_policy(po.logits, nb);
        ar.action = action_rng_.categorical(beta);
        ar.behavior_prob = config_.record_target_prob
                               ? softmax(po.logits)[static_cast<std::size_t>(ar.action)]
                               : beta[static_cast<std::size_t>(ar.action)];
        ar.bonus = std::move(bonus);
      }
    }

    const StepResult sr = env.step(ar.action);
    double intrinsic = 0.0;
    if (novelty_) {
      intrinsic = novelty_->intrinsic_bonus(sr.next_state);
      novelty_->observe(sr.next_state);
    }
    const CombinedReward r = combine(sr.reward, intrinsic);

    Transition tr;
    tr.state = s;
    tr.action = ar.action;
    tr.combined_reward = r.combined;
    tr.next_state = sr.next_state;
    tr.done = sr.done;
    tr.behavior_prob = ar.behavior_prob;
    tr.value_estimate = value;
    tr.bonus_entropy = entropy;
    rollout.push_back(tr);

    if (sr.done) env.reset();
  }
  return rollout;
}

UpdateReport Agent::update(std::span<const Transition> rollout) {
  if (rollout.empty()) throw UsageError("update: empty rollout");

  UpdateReport report;
  double entropy_sum = 0.0;
  int entropy_count = 0;
  for (const Transition& tr : rollout) {
    if (std::isfinite(tr.bonus_entropy)) {
      entropy_sum += tr.bonus_entropy;
      ++entropy_count;
    }
  }
  report.mean_bonus_entropy =
      entropy_count > 0 ? entropy_sum / entropy_count : kNan;

  if (config_.uses_policy_net()) {
    report.policy_loss = ppo_update(rollout);
  }
  if (balancer_) {
    std::vector<std::vector<double>> states;
    std::vector<int> actions;
    states.reserve(rollout.size());
    actions.reserve(rollout.size());
    for (const Transition& tr : rollout) {
      const auto feat = state_features(tr.state, env_);
      states.emplace_back(feat.begin(), feat.end());
      actions.push_back(tr.action);
    }
    report.action_balance_loss =
        balancer_->train_step(states, actions, config_.distill_learning_rate);
  }
  if (novelty_) {
    report.novelty_loss = novelty_->train_pending(config_.distill_learning_rate);
  }
  report.total_loss =
      report.policy_loss + report.action_balance_loss + report.novelty_loss;
  return report;
}

double Agent::ppo_update(std::span<const Transition> rollout) {
  const int n = static_cast<int>(rollout.size());
  const int k = kNumActions;
  const double inv_n = 1.0 / static_cast<double>(n);

  // GAE over the rollout; episode boundaries cut the recursion and the
  // bootstrap, the final transition bootstraps from the current value net
  std::vector<double> advantages(static_cast<std::size_t>(n));
  std::vector<double> returns(static_cast<std::size_t>(n));
  const Transition& last = rollout[static_cast<std::size_t>(n - 1)];
  const double bootstrap = last.done ? 0.0 : forward_policy(last.next_state).value;
  double gae = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const Transition& tr = rollout[static_cast<std::size_t>(t)];
    const double nonterminal = tr.done ? 0.0 : 1.0;
    const double v_next =
        (t == n - 1) ? bootstrap
                     : rollout[static_cast<std::size_t>(t + 1)].value_estimate;
    const double delta = tr.combined_reward +
                         config_.gamma * v_next * nonterminal -
                         tr.value_estimate;
    gae = delta + config_.gamma * config_.gae_lambda * nonterminal * gae;
    advantages[static_cast<std::size_t>(t)] = gae;
    returns[static_cast<std::size_t>(t)] = gae + tr.value_estimate;
  }

  std::vector<double> advantage_hat = advantages;
  if (config_.normalize_advantages) {
    const double m = mean(advantages);
    const double sd = stddev(advantages);
    if (sd >= 1e-12) {
      for (double& a : advantage_hat) a = (a - m) / (sd + 1e-8);
    } else {
      for (double& a : advantage_hat) a -= m;
    }
  }

  std::vector<double> grad(policy_params_.size());
  std::vector<double> out(static_cast<std::size_t>(k) + 1);
  std::vector<double> dl_dy(static_cast<std::size_t>(k) + 1);
  std::vector<double> pi(static_cast<std::size_t>(k));
  double first_epoch_loss = 0.0;

  for (int epoch = 0; epoch < config_.epochs_per_update; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double surrogate_loss = 0.0, value_loss = 0.0, mean_entropy = 0.0;

    for (int t = 0; t < n; ++t) {
      const Transition& tr = rollout[static_cast<std::size_t>(t)];
      const auto feat = state_features(tr.state, env_);
      mlp_forward(policy_spec_, policy_params_, feat, out, policy_ws_);

      double zmax = out[0];
      for (int j = 1; j < k; ++j) zmax = std::max(zmax, out[static_cast<std::size_t>(j)]);
      double zsum = 0.0;
      for (int j = 0; j < k; ++j) {
        pi[static_cast<std::size_t>(j)] = std::exp(out[static_cast<std::size_t>(j)] - zmax);
        zsum += pi[static_cast<std::size_t>(j)];
      }
      for (int j = 0; j < k; ++j) pi[static_cast<std::size_t>(j)] /= zsum;

      const double value = out[static_cast<std::size_t>(k)];
      const double a_hat = advantage_hat[static_cast<std::size_t>(t)];
      const double ratio = pi[static_cast<std::size_t>(tr.action)] / tr.behavior_prob;
      const double unclipped = ratio * a_hat;
      const double clipped =
          std::clamp(ratio, 1.0 - config_.clip_epsilon, 1.0 + config_.clip_epsilon) * a_hat;
      surrogate_loss -= std::min(unclipped, clipped) * inv_n;

      std::fill(dl_dy.begin(), dl_dy.end(), 0.0);
      if (unclipped <= clipped) {
        // d ratio / d logit_j = ratio * (1{j=a} - pi_j)
        const double c = -a_hat * ratio * inv_n;
        for (int j = 0; j < k; ++j) {
          const double indicator = (j == tr.action) ? 1.0 : 0.0;
          dl_dy[static_cast<std::size_t>(j)] = c * (indicator - pi[static_cast<std::size_t>(j)]);
        }
      }

      double entropy = 0.0;
      for (int j = 0; j < k; ++j) {
        const double p = pi[static_cast<std::size_t>(j)];
        if (p > 0.0) entropy -= p * std::log(p);
      }
      mean_entropy += entropy * inv_n;
      if (config_.entropy_coef > 0.0) {
        for (int j = 0; j < k; ++j) {
          const double p = pi[static_cast<std::size_t>(j)];
          if (p > 0.0) {
            dl_dy[static_cast<std::size_t>(j)] +=
                config_.entropy_coef * p * (std::log(p) + entropy) * inv_n;
          }
        }
      }

      const double value_err = value - returns[static_cast<std::size_t>(t)];
      value_loss += 0.5 * value_err * value_err * inv_n;
      dl_dy[static_cast<std::size_t>(k)] = config_.value_coef * value_err * inv_n;

      mlp_backward(policy_spec_, policy_params_, policy_ws_, dl_dy, grad);
    }

    if (epoch == 0) {
      first_epoch_loss = surrogate_loss + config_.value_coef * value_loss -
                         config_.entropy_coef * mean_entropy;
    }
    policy_optimizer_->step(policy_params_, grad, config_.learning_rate);
  }
  return first_epoch_loss;
}

std::vector<double> Agent::policy_logits(GridPos s) const {
  if (!config_.uses_policy_net()) {
    throw UsageError("the random method has no policy net");
  }
  return forward_policy(s).logits;
}

double Agent::state_value(GridPos s) const {
  if (!config_.uses_policy_net()) {
    throw UsageError("the random method has no policy net");
  }
  return forward_policy(s).value;
}

std::span<const double> Agent::policy_parameters() const {
  if (!config_.uses_policy_net()) {
    throw UsageError("the random method has no policy net");
  }
  return policy_params_;
}

void Agent::set_policy_parameters(std::span<const double> params) {
  if (!config_.uses_policy_net()) {
    throw UsageError("the random method has no policy net");
  }
  if (params.size() != policy_params_.size()) {
    throw UsageError("set_policy_parameters: wrong length");
  }
  std::copy(params.begin(), params.end(), policy_params_.begin());
}

std::array<double, 2> Agent::state_features_flat(GridPos s) const {
  return state_features(s, env_);
}

}  // namespace abx

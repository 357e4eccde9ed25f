#include "abx/action_balance.hpp"

#include <algorithm>
#include <cmath>

namespace abx {

void ActionEmbeddingScheme::validate() const {
  if (k < 1) throw ConfigError("action-space size k must be >= 1");
  if (kind == EmbeddingKind::action_channel) {
    if (channel_rows < 1 || channel_cols < 1) {
      throw ConfigError("action channel dimensions must be >= 1");
    }
    if (channel_rows / k < 1) {
      throw ConfigError("action channel needs floor(m/k) >= 1");
    }
  }
}

std::vector<double> embed_action(int action, const ActionEmbeddingScheme& scheme) {
  scheme.validate();
  if (action < 0 || action >= scheme.k) {
    throw UsageError("action index " + std::to_string(action) +
                     " outside [0, " + std::to_string(scheme.k) + ")");
  }
  if (scheme.kind == EmbeddingKind::one_hot) {
    std::vector<double> e(scheme.k, 0.0);
    e[static_cast<std::size_t>(action)] = 1.0;
    return e;
  }
  const int m = scheme.channel_rows;
  const int n = scheme.channel_cols;
  const int part = m / scheme.k;  // floor(m/k)
  std::vector<double> mat(static_cast<std::size_t>(m) * n, 0.0);
  for (int row = action * part; row < (action + 1) * part; ++row) {
    for (int col = 0; col < n; ++col) {
      mat[static_cast<std::size_t>(row) * n + col] = scheme.pad_value;
    }
  }
  return mat;
}

std::vector<double> normalize(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  double m = 0.0;
  for (double v : values) m += v;
  m /= static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - m) * (v - m);
  const double sd = std::sqrt(var / static_cast<double>(n));
  if (sd < 1e-12) return out;  // equal bonuses: exact no-op downstream
  for (std::size_t i = 0; i < n; ++i) out[i] = (values[i] - m) / (sd + 1e-8);
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - zmax);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> mix_policy(std::span<const double> policy_logits,
                               std::span<const double> normalized_bonus) {
  if (policy_logits.size() != normalized_bonus.size()) {
    throw UsageError("mix_policy: length mismatch");
  }
  if (policy_logits.empty()) throw UsageError("mix_policy: empty input");
  std::vector<double> shifted(policy_logits.size());
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    if (!std::isfinite(policy_logits[i]) || !std::isfinite(normalized_bonus[i])) {
      throw UsageError("mix_policy: non-finite entry");
    }
    shifted[i] = policy_logits[i] + normalized_bonus[i];
  }
  return softmax(shifted);
}

double bonus_entropy(const BonusVector& v) {
  const std::vector<double> p = softmax(normalize(v));
  double h = 0.0;
  for (double pi : p) {
    if (pi > 0.0) h -= pi * std::log(pi);
  }
  return h;
}

ActionBalancer::ActionBalancer(int state_dim,
                               const ActionEmbeddingScheme& scheme,
                               std::optional<ActionEmbeddingScheme> augmentation,
                               int hidden_dim, int hidden_layers,
                               int embedding_dim, std::uint64_t seed,
                               OptimizerKind optimizer,
                               NormalizeMode normalize_mode)
    : state_dim_(state_dim),
      scheme_(scheme),
      augmentation_(std::move(augmentation)),
      normalize_mode_(normalize_mode) {
  if (state_dim < 1) throw ConfigError("state_dim must be >= 1");
  scheme_.validate();
  if (augmentation_) {
    if (augmentation_->kind != EmbeddingKind::action_channel) {
      throw ConfigError("augmentation embedding must be an action channel");
    }
    if (augmentation_->k != scheme_.k) {
      throw ConfigError("augmentation k must match the primary scheme");
    }
    augmentation_->validate();
  }

  embeddings_.reserve(static_cast<std::size_t>(scheme_.k));
  for (int a = 0; a < scheme_.k; ++a) {
    std::vector<double> e = embed_action(a, scheme_);
    if (augmentation_) {
      const std::vector<double> ch = embed_action(a, *augmentation_);
      e.insert(e.end(), ch.begin(), ch.end());
    }
    embeddings_.push_back(std::move(e));
  }

  ApproximatorSpec spec;
  spec.input_dim = state_dim_ + static_cast<int>(embeddings_[0].size());
  spec.hidden_dim = hidden_dim;
  spec.output_dim = embedding_dim;
  spec.hidden_layers = hidden_layers;
  pair_ = std::make_unique<DistillationPair>(spec, seed, optimizer);
  input_scratch_.resize(static_cast<std::size_t>(spec.input_dim));
}

std::vector<double>& ActionBalancer::concat_input(std::span<const double> state,
                                                  int action) const {
  if (static_cast<int>(state.size()) != state_dim_) {
    throw UsageError("state feature length " + std::to_string(state.size()) +
                     ", expected " + std::to_string(state_dim_));
  }
  std::copy(state.begin(), state.end(), input_scratch_.begin());
  const auto& e = embeddings_[static_cast<std::size_t>(action)];
  std::copy(e.begin(), e.end(), input_scratch_.begin() + state_dim_);
  return input_scratch_;
}

double ActionBalancer::action_bonus(std::span<const double> state,
                                    int action) const {
  if (action < 0 || action >= scheme_.k) {
    throw UsageError("action index outside the action space");
  }
  return pair_->prediction_error(concat_input(state, action));
}

BonusVector ActionBalancer::bonus_vector(std::span<const double> state,
                                         long state_tag) const {
  BonusVector v;
  v.state_tag = state_tag;
  v.values.reserve(static_cast<std::size_t>(scheme_.k));
  for (int a = 0; a < scheme_.k; ++a) {
    v.values.push_back(action_bonus(state, a));
  }
  return v;
}

std::vector<double> ActionBalancer::apply_normalize(const BonusVector& v) {
  if (normalize_mode_ == NormalizeMode::per_vector) return normalize(v);
  for (double b : v.values) running_.add(b);
  const double sd = running_.stddev();
  std::vector<double> out(v.values.size(), 0.0);
  if (sd < 1e-12) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (v.values[i] - running_.mean()) / (sd + 1e-8);
  }
  return out;
}

double ActionBalancer::train_step(std::span<const std::vector<double>> states,
                                  std::span<const int> actions,
                                  double learning_rate) {
  if (states.empty() || states.size() != actions.size()) {
    throw UsageError("train_step: states/actions size mismatch or empty");
  }
  std::vector<std::vector<double>> batch;
  batch.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (actions[i] < 0 || actions[i] >= scheme_.k) {
      throw UsageError("train_step: action index outside the action space");
    }
    batch.push_back(concat_input(states[i], actions[i]));
  }
  return pair_->train_step(batch, learning_rate).mean_squared_error_before;
}

}  // namespace abx

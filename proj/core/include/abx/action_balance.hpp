#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "abx/approximator.hpp"
#include "abx/stats.hpp"

namespace abx {

enum class EmbeddingKind { one_hot, action_channel };

/// Fixed (non-learned) action embedding. one_hot yields the unit basis
/// vector e_a of length k. action_channel yields an m x n matrix (flattened
/// row-major) whose rows [a*floor(m/k), (a+1)*floor(m/k) - 1] are filled
/// with the pad value c and all other entries are 0.
struct ActionEmbeddingScheme {
  EmbeddingKind kind = EmbeddingKind::one_hot;
  int k = 4;
  int channel_rows = 8;   // m
  int channel_cols = 4;   // n
  double pad_value = 1.0; // c

  int embedding_length() const {
    return kind == EmbeddingKind::one_hot ? k : channel_rows * channel_cols;
  }
  void validate() const;
};

std::vector<double> embed_action(int action, const ActionEmbeddingScheme& scheme);

/// Per-action novelty bonuses at one state, in action-index order.
struct BonusVector {
  std::vector<double> values;
  long state_tag = 0;  // provenance, e.g. the grid cell index
};

/// Within-vector standardization: (v - mean) / (std + 1e-8), population std.
/// Degenerate vectors (std < 1e-12) map to all zeros, making equal bonuses
/// an exact no-op downstream. Order-preserving.
std::vector<double> normalize(std::span<const double> values);
inline std::vector<double> normalize(const BonusVector& v) {
  return normalize(std::span<const double>(v.values));
}

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// softmax(policy_logits + normalized_bonus): the behavior policy that
/// raises the probability of rarely chosen actions. Throws UsageError on
/// length mismatch or non-finite entries.
std::vector<double> mix_policy(std::span<const double> policy_logits,
                               std::span<const double> normalized_bonus);

/// Shannon entropy (natural log) of softmax(normalize(v)). High when the
/// bonuses are near-exchangeable, low when one action stands out.
double bonus_entropy(const BonusVector& v);

enum class NormalizeMode { per_vector, running };

/// Distillation pair over concatenated (state features, embedded action).
/// Scores how rarely each action has been taken in a state; training on the
/// taken (s, a) pairs lowers their bonus, an upper-confidence-bound analogue
/// for function approximation.
class ActionBalancer {
 public:
  /// `augmentation`, when present, is a second (action_channel) embedding
  /// appended after the primary one, used to raise the proportion of action
  /// features in the net input.
  ActionBalancer(int state_dim, const ActionEmbeddingScheme& scheme,
                 std::optional<ActionEmbeddingScheme> augmentation,
                 int hidden_dim, int hidden_layers, int embedding_dim,
                 std::uint64_t seed,
                 OptimizerKind optimizer = OptimizerKind::adam,
                 NormalizeMode normalize_mode = NormalizeMode::per_vector);

  int num_actions() const { return scheme_.k; }
  int state_dim() const { return state_dim_; }
  const ActionEmbeddingScheme& scheme() const { return scheme_; }
  const DistillationPair& pair() const { return *pair_; }
  DistillationPair& pair() { return *pair_; }

  /// Prediction error of the pair on concat(state, embedding(action)). Pure.
  double action_bonus(std::span<const double> state, int action) const;

  /// All k action bonuses, evaluated before any action is taken.
  BonusVector bonus_vector(std::span<const double> state, long state_tag = 0) const;

  /// Normalization as configured; the running mode folds the new values
  /// into its statistics first.
  std::vector<double> apply_normalize(const BonusVector& v);

  /// One gradient pass on the taken (state, action) pairs of a rollout.
  /// Returns the pre-step mean squared error.
  double train_step(std::span<const std::vector<double>> states,
                    std::span<const int> actions, double learning_rate);

 private:
  std::vector<double>& concat_input(std::span<const double> state, int action) const;

  int state_dim_;
  ActionEmbeddingScheme scheme_;
  std::optional<ActionEmbeddingScheme> augmentation_;
  std::vector<std::vector<double>> embeddings_;  // per action, fixed
  std::unique_ptr<DistillationPair> pair_;
  NormalizeMode normalize_mode_;
  RunningStat running_;
  mutable std::vector<double> input_scratch_;
};

}  // namespace abx

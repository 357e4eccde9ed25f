#pragma once

#include <memory>
#include <string>
#include <vector>

#include "abx/approximator.hpp"
#include "abx/gridworld.hpp"
#include "abx/stats.hpp"

namespace abx {

enum class NoveltyVariant { tabular, neural };

struct CombinedReward {
  double external = 0.0;
  double intrinsic = 0.0;
  double combined = 0.0;
};

/// r' = r + r^i. Throws UsageError on non-finite inputs.
CombinedReward combine(double external, double intrinsic);

/// Next-state novelty. The tabular variant keys visit counts by cell index
/// and scores 1/sqrt(n+1); the neural variant scores the prediction error of
/// a distillation pair over the state features, optionally divided by a
/// running std of observed errors.
class NoveltyEstimator {
 public:
  static NoveltyEstimator make_tabular(const EnvConfig& env);
  static NoveltyEstimator make_neural(const EnvConfig& env,
                                      const ApproximatorSpec& spec,
                                      std::uint64_t seed,
                                      OptimizerKind optimizer = OptimizerKind::adam,
                                      bool running_std_normalization = false);

  NoveltyVariant variant() const { return variant_; }

  /// Pure: no count update, no batch append.
  double intrinsic_bonus(GridPos s_next) const;

  /// Tabular: increments the cell count. Neural: appends the state to the
  /// pending training batch (the gradient step happens in train_pending).
  void observe(GridPos s_next);

  /// Neural: one gradient step on the pending batch; returns the pre-step
  /// loss and clears the batch. Tabular or empty batch: no-op returning 0.
  double train_pending(double learning_rate);

  long visit_count(GridPos pos) const;           // tabular only
  const std::vector<long>& counts() const;       // tabular only
  std::size_t pending_batch_size() const { return pending_.size(); }

  /// CSV export of the count table: state_index,x,y,count.
  std::string counts_csv() const;

  const DistillationPair* pair() const { return pair_.get(); }

 private:
  explicit NoveltyEstimator(NoveltyVariant variant, const EnvConfig& env);

  NoveltyVariant variant_;
  EnvConfig env_;
  std::vector<long> counts_;                      // tabular payload
  std::unique_ptr<DistillationPair> pair_;        // neural payload
  std::vector<std::vector<double>> pending_;
  bool running_std_ = false;
  RunningStat error_stat_;
};

}  // namespace abx

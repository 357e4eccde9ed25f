#include "abx/novelty.hpp"

#include <cmath>

#include "abx/csv.hpp"

namespace abx {

CombinedReward combine(double external, double intrinsic) {
  if (!std::isfinite(external) || !std::isfinite(intrinsic)) {
    throw UsageError("combine: non-finite reward");
  }
  return CombinedReward{external, intrinsic, external + intrinsic};
}

NoveltyEstimator::NoveltyEstimator(NoveltyVariant variant, const EnvConfig& env)
    : variant_(variant), env_(env) {
  env_.validate();
}

NoveltyEstimator NoveltyEstimator::make_tabular(const EnvConfig& env) {
  NoveltyEstimator est(NoveltyVariant::tabular, env);
  est.counts_.assign(static_cast<std::size_t>(env.width) * env.height, 0);
  return est;
}

NoveltyEstimator NoveltyEstimator::make_neural(const EnvConfig& env,
                                               const ApproximatorSpec& spec,
                                               std::uint64_t seed,
                                               OptimizerKind optimizer,
                                               bool running_std_normalization) {
  NoveltyEstimator est(NoveltyVariant::neural, env);
  if (spec.input_dim != 2) {
    throw ConfigError("neural novelty expects input_dim 2 (state features)");
  }
  est.pair_ = std::make_unique<DistillationPair>(spec, seed, optimizer);
  est.running_std_ = running_std_normalization;
  return est;
}

double NoveltyEstimator::intrinsic_bonus(GridPos s_next) const {
  if (!env_.contains(s_next)) throw UsageError("state outside the grid");
  if (variant_ == NoveltyVariant::tabular) {
    const long n = counts_[static_cast<std::size_t>(state_index(s_next, env_))];
    return 1.0 / std::sqrt(static_cast<double>(n) + 1.0);
  }
  const auto feat = state_features(s_next, env_);
  const double err = pair_->prediction_error(feat);
  if (!running_std_) return err;
  return err / (error_stat_.stddev() + 1e-8);
}

void NoveltyEstimator::observe(GridPos s_next) {
  if (!env_.contains(s_next)) throw UsageError("state outside the grid");
  if (variant_ == NoveltyVariant::tabular) {
    ++counts_[static_cast<std::size_t>(state_index(s_next, env_))];
    return;
  }
  const auto feat = state_features(s_next, env_);
  if (running_std_) error_stat_.add(pair_->prediction_error(feat));
  pending_.emplace_back(feat.begin(), feat.end());
}

double NoveltyEstimator::train_pending(double learning_rate) {
  if (variant_ == NoveltyVariant::tabular || pending_.empty()) return 0.0;
  const TrainReport report = pair_->train_step(pending_, learning_rate);
  pending_.clear();
  return report.mean_squared_error_before;
}

long NoveltyEstimator::visit_count(GridPos pos) const {
  if (variant_ != NoveltyVariant::tabular) {
    throw UsageError("visit_count on a neural estimator");
  }
  return counts_[static_cast<std::size_t>(state_index(pos, env_))];
}

const std::vector<long>& NoveltyEstimator::counts() const {
  if (variant_ != NoveltyVariant::tabular) {
    throw UsageError("counts on a neural estimator");
  }
  return counts_;
}

std::string NoveltyEstimator::counts_csv() const {
  if (variant_ != NoveltyVariant::tabular) {
    throw UsageError("counts_csv on a neural estimator");
  }
  CsvWriter csv({"state_index", "x", "y", "count"});
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    const GridPos p = pos_from_index(static_cast<int>(i), env_);
    csv.add_row({std::to_string(i), std::to_string(p.x), std::to_string(p.y),
                 std::to_string(counts_[i])});
  }
  return csv.content();
}

}  // namespace abx

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "abx/agent.hpp"
#include "abx/gridworld.hpp"
#include "abx/stats.hpp"

namespace abx {

enum class ExperimentKind { coverage, goal, entropy };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::coverage;
  std::vector<Method> methods;
  int runs = 100;
  int episodes = 100;
  int record_every = 10;
  std::vector<GridPos> endpoints;  // goal kind only
  std::uint64_t base_seed = 0;
  long goal_step_cap = 100000;
  bool allow_censored = true;

  void validate() const;
};

struct RunOptions {
  int jobs = 0;  // 0 = all hardware threads; always capped at the item count
  std::filesystem::path out_dir;  // empty: keep results in memory only
  bool write_update_logs = true;
};

/// Mean/std state-coverage rate R_s per cumulative-step checkpoint.
struct CoverageCurve {
  std::vector<long> checkpoints;
  std::vector<double> mean_coverage;
  std::vector<double> std_coverage;
};

/// Per-cell visit counts accumulated over all runs up to a step checkpoint.
struct HeatmapGrid {
  int width = 0;
  int height = 0;
  long checkpoint = 0;
  std::vector<long> counts;  // row-major
  long total() const;
};

struct CoverageMethodResult {
  Method method = Method::random;
  CoverageCurve curve;
  std::vector<std::vector<double>> per_run_coverage;  // [run][checkpoint]
  std::vector<double> final_unique_cells;             // per run
  double mean_final_unique_cells = 0.0;
  std::vector<HeatmapGrid> heatmaps;
};

struct CoverageExperimentResult {
  std::vector<long> checkpoints;
  std::vector<CoverageMethodResult> methods;
  const CoverageMethodResult* find(Method m) const;
};

/// Steps until first goal contact, one entry per run; censored runs carry
/// the cap value.
struct GoalResult {
  GridPos endpoint;
  std::vector<long> steps;
  std::vector<char> censored;
  Summary summary;
  int censored_count = 0;
};

struct GoalMethodResult {
  Method method = Method::random;
  std::vector<GoalResult> endpoints;
  double endpoint_averaged_mean = 0.0;
};

struct GoalExperimentResult {
  std::vector<GoalMethodResult> methods;
  const GoalMethodResult* find(Method m) const;
};

struct EntropyCurve {
  std::string scheme;                // "one_hot" or "one_hot_channel"
  std::vector<double> mean_entropy;  // per update, averaged over runs
};

struct EntropyExperimentResult {
  std::vector<EntropyCurve> schemes;
};

/// Elementwise (curve - baseline) / baseline; entries with a zero baseline
/// are reported as missing rather than zero. Throws UsageError if the
/// checkpoint grids differ.
std::vector<std::optional<double>> relative_increase(const CoverageCurve& curve,
                                                     const CoverageCurve& baseline);

/// First checkpoint at which curve's mean coverage strictly exceeds the
/// baseline's; nullopt if it never does.
std::optional<long> first_positive_crossing(const CoverageCurve& curve,
                                            const CoverageCurve& baseline);

CoverageExperimentResult run_coverage(const ExperimentSpec& spec,
                                      const EnvConfig& env,
                                      const AgentConfig& agent,
                                      const RunOptions& options);

GoalExperimentResult run_goal(const ExperimentSpec& spec, const EnvConfig& env,
                              const AgentConfig& agent,
                              const RunOptions& options);

EntropyExperimentResult run_entropy(const ExperimentSpec& spec,
                                    const EnvConfig& env,
                                    const AgentConfig& agent,
                                    const RunOptions& options);

// aggregation: summary statistics plus the plot-ready CSV tree
void write_coverage_outputs(const CoverageExperimentResult& result,
                            const std::filesystem::path& dir);
void write_goal_outputs(const GoalExperimentResult& result,
                        const std::filesystem::path& dir);
void write_entropy_outputs(const EntropyExperimentResult& result,
                           const std::filesystem::path& dir);

/// Runs fn(0..items-1) on a small worker pool. Used for (method, seed) runs;
/// items must not share mutable state.
void parallel_for(int jobs, int items, const std::function<void(int)>& fn);

}  // namespace abx

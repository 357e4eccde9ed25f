#include "abx/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "abx/csv.hpp"

namespace abx {

namespace {

// Fig-5-style heatmap snapshot points
constexpr long kHeatmapCheckpoints[] = {1000, 2000, 3000, 4000};

std::string run_log_row(int update_index, const UpdateReport& r) {
  return std::to_string(update_index) + "," + format_real(r.policy_loss) + "," +
         format_real(r.action_balance_loss) + "," + format_real(r.novelty_loss) +
         "," + format_real(r.total_loss) + "," + format_real(r.mean_bonus_entropy);
}

constexpr const char* kUpdateLogHeader =
    "update_index,policy_loss,action_balance_loss,novelty_loss,total_loss,"
    "mean_bonus_entropy";

void write_update_log(const std::filesystem::path& path,
                      const std::vector<std::string>& rows) {
  std::string content = std::string(kUpdateLogHeader) + "\n";
  for (const auto& r : rows) {
    content += r;
    content += '\n';
  }
  write_file_atomic(path, content);
}

}  // namespace

void ExperimentSpec::validate() const {
  if (methods.empty() && kind != ExperimentKind::entropy) {
    throw ConfigError("experiment needs at least one method");
  }
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (record_every < 1) throw ConfigError("record_every must be >= 1");
  if (kind == ExperimentKind::goal && endpoints.empty()) {
    throw ConfigError("goal experiment requires endpoints");
  }
  if (goal_step_cap < 1) throw ConfigError("goal_step_cap must be >= 1");
}

long HeatmapGrid::total() const {
  long t = 0;
  for (long c : counts) t += c;
  return t;
}

const CoverageMethodResult* CoverageExperimentResult::find(Method m) const {
  for (const auto& r : methods) {
    if (r.method == m) return &r;
  }
  return nullptr;
}

const GoalMethodResult* GoalExperimentResult::find(Method m) const {
  for (const auto& r : methods) {
    if (r.method == m) return &r;
  }
  return nullptr;
}

void parallel_for(int jobs, int items, const std::function<void(int)>& fn) {
  if (items <= 0) return;
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs <= 0) jobs = hw > 0 ? hw : 1;
  jobs = std::min(jobs, items);
  if (jobs <= 1) {
    for (int i = 0; i < items; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= items) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::optional<double>> relative_increase(
    const CoverageCurve& curve, const CoverageCurve& baseline) {
  if (curve.checkpoints != baseline.checkpoints) {
    throw UsageError("relative_increase: misaligned checkpoints");
  }
  std::vector<std::optional<double>> out(curve.mean_coverage.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double b = baseline.mean_coverage[i];
    if (b == 0.0) continue;  // missing, not zero
    out[i] = (curve.mean_coverage[i] - b) / b;
  }
  return out;
}

std::optional<long> first_positive_crossing(const CoverageCurve& curve,
                                            const CoverageCurve& baseline) {
  const auto rel = relative_increase(curve, baseline);
  for (std::size_t i = 0; i < rel.size(); ++i) {
    if (rel[i] && *rel[i] > 0.0) return curve.checkpoints[i];
  }
  return std::nullopt;
}

namespace {

struct CoverageRunOutput {
  std::vector<double> coverage;          // one entry per checkpoint
  std::vector<std::vector<long>> heatmaps;  // per heatmap checkpoint
  double final_unique = 0.0;
};

CoverageRunOutput run_one_coverage(Method method, int run_index,
                                   const ExperimentSpec& spec,
                                   const EnvConfig& env_config,
                                   const AgentConfig& agent_base,
                                   const std::vector<long>& checkpoints,
                                   const std::vector<long>& heatmap_checkpoints,
                                   const RunOptions& options) {
  AgentConfig agent_config = agent_base;
  agent_config.method = method;
  agent_config.seed = spec.base_seed + static_cast<std::uint64_t>(run_index);

  GridWorld env(env_config);
  Agent agent(agent_config, env_config);

  const int cells = env_config.width * env_config.height;
  std::vector<char> visited(static_cast<std::size_t>(cells), 0);
  std::vector<long> heat(static_cast<std::size_t>(cells), 0);
  long unique = 0;
  auto visit = [&](GridPos p) {
    char& v = visited[static_cast<std::size_t>(state_index(p, env_config))];
    if (!v) {
      v = 1;
      ++unique;
    }
  };

  const long total_steps =
      static_cast<long>(spec.episodes) * env_config.max_episode_len;
  CoverageRunOutput out;
  out.coverage.reserve(checkpoints.size());
  std::vector<std::string> log_rows;

  env.reset();
  visit(env_config.start);  // occupying the start cell at reset counts

  long global_step = 0;
  std::size_t next_checkpoint = 0;
  std::size_t next_heatmap = 0;
  int update_index = 0;
  while (global_step < total_steps) {
    const std::vector<Transition> rollout = agent.collect_rollout(env);
    for (const Transition& tr : rollout) {
      if (global_step >= total_steps) break;
      ++global_step;
      visit(tr.next_state);
      ++heat[static_cast<std::size_t>(state_index(tr.next_state, env_config))];
      if (tr.done) visit(env_config.start);
      if (next_checkpoint < checkpoints.size() &&
          global_step == checkpoints[next_checkpoint]) {
        out.coverage.push_back(static_cast<double>(unique) / cells);
        ++next_checkpoint;
      }
      if (next_heatmap < heatmap_checkpoints.size() &&
          global_step == heatmap_checkpoints[next_heatmap]) {
        out.heatmaps.push_back(heat);
        ++next_heatmap;
      }
    }
    const UpdateReport report = agent.update(rollout);
    if (options.write_update_logs && !options.out_dir.empty()) {
      log_rows.push_back(run_log_row(update_index, report));
    }
    ++update_index;
  }
  out.final_unique = static_cast<double>(unique);

  if (options.write_update_logs && !options.out_dir.empty()) {
    write_update_log(options.out_dir / method_name(method) / "runs" /
                         ("r" + std::to_string(run_index)) / "updates.csv",
                     log_rows);
  }
  return out;
}

}  // namespace

CoverageExperimentResult run_coverage(const ExperimentSpec& spec,
                                      const EnvConfig& env,
                                      const AgentConfig& agent,
                                      const RunOptions& options) {
  spec.validate();
  env.validate();
  if (spec.kind != ExperimentKind::coverage) {
    throw ConfigError("run_coverage needs a coverage spec");
  }
  if (env.goal) {
    throw ConfigError("coverage experiment must not set a goal");
  }

  const long total_steps = static_cast<long>(spec.episodes) * env.max_episode_len;
  std::vector<long> checkpoints;
  for (long s = spec.record_every; s <= total_steps; s += spec.record_every) {
    checkpoints.push_back(s);
  }
  std::vector<long> heatmap_checkpoints;
  for (long c : kHeatmapCheckpoints) {
    if (c <= total_steps) heatmap_checkpoints.push_back(c);
  }

  CoverageExperimentResult result;
  result.checkpoints = checkpoints;

  const int n_methods = static_cast<int>(spec.methods.size());
  std::vector<std::vector<CoverageRunOutput>> raw(
      static_cast<std::size_t>(n_methods));
  for (auto& v : raw) v.resize(static_cast<std::size_t>(spec.runs));

  parallel_for(options.jobs, n_methods * spec.runs, [&](int item) {
    const int m = item / spec.runs;
    const int r = item % spec.runs;
    raw[static_cast<std::size_t>(m)][static_cast<std::size_t>(r)] =
        run_one_coverage(spec.methods[static_cast<std::size_t>(m)], r, spec, env,
                         agent, checkpoints, heatmap_checkpoints, options);
  });

  for (int m = 0; m < n_methods; ++m) {
    CoverageMethodResult mr;
    mr.method = spec.methods[static_cast<std::size_t>(m)];
    mr.curve.checkpoints = checkpoints;
    mr.curve.mean_coverage.resize(checkpoints.size());
    mr.curve.std_coverage.resize(checkpoints.size());

    const auto& runs = raw[static_cast<std::size_t>(m)];
    std::vector<double> column(runs.size());
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      for (std::size_t r = 0; r < runs.size(); ++r) column[r] = runs[r].coverage[c];
      mr.curve.mean_coverage[c] = mean(column);
      mr.curve.std_coverage[c] = stddev(column);
    }
    for (const auto& run : runs) {
      mr.per_run_coverage.push_back(run.coverage);
      mr.final_unique_cells.push_back(run.final_unique);
    }
    mr.mean_final_unique_cells = mean(mr.final_unique_cells);

    for (std::size_t h = 0; h < heatmap_checkpoints.size(); ++h) {
      HeatmapGrid grid;
      grid.width = env.width;
      grid.height = env.height;
      grid.checkpoint = heatmap_checkpoints[h];
      grid.counts.assign(static_cast<std::size_t>(env.width) * env.height, 0);
      for (const auto& run : runs) {
        for (std::size_t i = 0; i < grid.counts.size(); ++i) {
          grid.counts[i] += run.heatmaps[h][i];
        }
      }
      mr.heatmaps.push_back(std::move(grid));
    }
    result.methods.push_back(std::move(mr));
  }
  return result;
}

namespace {

struct GoalRunOutput {
  long steps = 0;
  bool censored = false;
};

GoalRunOutput run_one_goal(Method method, GridPos endpoint, int run_index,
                           const ExperimentSpec& spec,
                           const EnvConfig& env_base,
                           const AgentConfig& agent_base,
                           const RunOptions& options) {
  EnvConfig env_config = env_base;
  env_config.goal = endpoint;
  AgentConfig agent_config = agent_base;
  agent_config.method = method;
  agent_config.seed = spec.base_seed + static_cast<std::uint64_t>(run_index);

  GridWorld env(env_config);
  Agent agent(agent_config, env_config);

  std::vector<std::string> log_rows;
  long global_step = 0;
  int update_index = 0;
  GoalRunOutput out;
  for (;;) {
    const std::vector<Transition> rollout = agent.collect_rollout(env);
    bool finished = false;
    for (const Transition& tr : rollout) {
      ++global_step;
      if (tr.done && tr.next_state == endpoint) {
        out.steps = global_step;
        finished = true;
        break;
      }
      if (global_step >= spec.goal_step_cap) {
        out.steps = spec.goal_step_cap;
        out.censored = true;
        finished = true;
        break;
      }
    }
    if (finished) break;
    const UpdateReport report = agent.update(rollout);
    if (options.write_update_logs && !options.out_dir.empty()) {
      log_rows.push_back(run_log_row(update_index, report));
    }
    ++update_index;
  }

  if (options.write_update_logs && !options.out_dir.empty()) {
    write_update_log(options.out_dir / method_name(method) / "runs" /
                         ("g" + std::to_string(endpoint.x) + "_" +
                          std::to_string(endpoint.y) + "_r" +
                          std::to_string(run_index)) /
                         "updates.csv",
                     log_rows);
  }
  return out;
}

}  // namespace

GoalExperimentResult run_goal(const ExperimentSpec& spec, const EnvConfig& env,
                              const AgentConfig& agent,
                              const RunOptions& options) {
  spec.validate();
  env.validate();
  if (spec.kind != ExperimentKind::goal) {
    throw ConfigError("run_goal needs a goal spec");
  }
  for (const GridPos& e : spec.endpoints) {
    if (!env.contains(e)) {
      throw ConfigError("endpoint (" + std::to_string(e.x) + "," +
                        std::to_string(e.y) + ") outside the grid");
    }
  }

  const int n_methods = static_cast<int>(spec.methods.size());
  const int n_endpoints = static_cast<int>(spec.endpoints.size());
  std::vector<GoalRunOutput> raw(
      static_cast<std::size_t>(n_methods * n_endpoints * spec.runs));

  parallel_for(options.jobs, n_methods * n_endpoints * spec.runs, [&](int item) {
    const int m = item / (n_endpoints * spec.runs);
    const int e = (item / spec.runs) % n_endpoints;
    const int r = item % spec.runs;
    raw[static_cast<std::size_t>(item)] =
        run_one_goal(spec.methods[static_cast<std::size_t>(m)],
                     spec.endpoints[static_cast<std::size_t>(e)], r, spec, env,
                     agent, options);
  });

  GoalExperimentResult result;
  for (int m = 0; m < n_methods; ++m) {
    GoalMethodResult mr;
    mr.method = spec.methods[static_cast<std::size_t>(m)];
    double mean_sum = 0.0;
    for (int e = 0; e < n_endpoints; ++e) {
      GoalResult gr;
      gr.endpoint = spec.endpoints[static_cast<std::size_t>(e)];
      std::vector<double> steps_real;
      for (int r = 0; r < spec.runs; ++r) {
        const auto& ro =
            raw[static_cast<std::size_t>((m * n_endpoints + e) * spec.runs + r)];
        gr.steps.push_back(ro.steps);
        gr.censored.push_back(ro.censored ? 1 : 0);
        if (ro.censored) ++gr.censored_count;
        steps_real.push_back(static_cast<double>(ro.steps));
      }
      gr.summary = summarize(steps_real);
      mean_sum += gr.summary.mean;
      mr.endpoints.push_back(std::move(gr));
    }
    mr.endpoint_averaged_mean = mean_sum / n_endpoints;
    result.methods.push_back(std::move(mr));
  }
  return result;
}

EntropyExperimentResult run_entropy(const ExperimentSpec& spec,
                                    const EnvConfig& env,
                                    const AgentConfig& agent,
                                    const RunOptions& options) {
  spec.validate();
  env.validate();
  if (spec.kind != ExperimentKind::entropy) {
    throw ConfigError("run_entropy needs an entropy spec");
  }

  struct SchemeConfig {
    std::string name;
    bool augment = false;
  };
  const SchemeConfig schemes[] = {{"one_hot", false}, {"one_hot_channel", true}};

  const long total_steps = static_cast<long>(spec.episodes) * env.max_episode_len;
  const int updates =
      static_cast<int>((total_steps + agent.rollout_len - 1) / agent.rollout_len);

  EntropyExperimentResult result;
  for (const SchemeConfig& sc : schemes) {
    AgentConfig base = agent;
    base.method = Method::action_balance_rnd;
    base.embedding.kind = EmbeddingKind::one_hot;
    if (sc.augment) {
      ActionEmbeddingScheme channel = agent.embedding;
      channel.kind = EmbeddingKind::action_channel;
      base.state_channel = channel;
    } else {
      base.state_channel.reset();
    }

    std::vector<std::vector<double>> per_run(static_cast<std::size_t>(spec.runs));
    parallel_for(options.jobs, spec.runs, [&](int r) {
      AgentConfig config = base;
      config.seed = spec.base_seed + static_cast<std::uint64_t>(r);
      GridWorld world(env);
      Agent a(config, env);
      std::vector<double> entropies;
      entropies.reserve(static_cast<std::size_t>(updates));
      std::vector<std::string> log_rows;
      for (int u = 0; u < updates; ++u) {
        const auto rollout = a.collect_rollout(world);
        const UpdateReport report = a.update(rollout);
        entropies.push_back(report.mean_bonus_entropy);
        if (options.write_update_logs && !options.out_dir.empty()) {
          log_rows.push_back(run_log_row(u, report));
        }
      }
      if (options.write_update_logs && !options.out_dir.empty()) {
        write_update_log(options.out_dir / sc.name / "runs" /
                             ("r" + std::to_string(r)) / "updates.csv",
                         log_rows);
      }
      per_run[static_cast<std::size_t>(r)] = std::move(entropies);
    });

    EntropyCurve curve;
    curve.scheme = sc.name;
    curve.mean_entropy.resize(static_cast<std::size_t>(updates));
    std::vector<double> column(static_cast<std::size_t>(spec.runs));
    for (int u = 0; u < updates; ++u) {
      for (int r = 0; r < spec.runs; ++r) {
        column[static_cast<std::size_t>(r)] =
            per_run[static_cast<std::size_t>(r)][static_cast<std::size_t>(u)];
      }
      curve.mean_entropy[static_cast<std::size_t>(u)] = mean(column);
    }
    result.schemes.push_back(std::move(curve));
  }
  return result;
}

void write_coverage_outputs(const CoverageExperimentResult& result,
                            const std::filesystem::path& dir) {
  for (const auto& mr : result.methods) {
    const std::filesystem::path mdir = dir / method_name(mr.method);
    CsvWriter curve({"checkpoint", "mean_R_s", "std_R_s"});
    for (std::size_t i = 0; i < mr.curve.checkpoints.size(); ++i) {
      curve.add_row({std::to_string(mr.curve.checkpoints[i]),
                     format_real(mr.curve.mean_coverage[i]),
                     format_real(mr.curve.std_coverage[i])});
    }
    curve.write(mdir / "curve.csv");

    for (const HeatmapGrid& grid : mr.heatmaps) {
      CsvWriter heat({"state_index", "x", "y", "count"});
      for (std::size_t i = 0; i < grid.counts.size(); ++i) {
        const int x = static_cast<int>(i) % grid.width;
        const int y = static_cast<int>(i) / grid.width;
        heat.add_row({std::to_string(i), std::to_string(x), std::to_string(y),
                      std::to_string(grid.counts[i])});
      }
      heat.write(mdir / ("heatmap_" + std::to_string(grid.checkpoint) + ".csv"));
    }
  }

  // cross-method summary; crossing step is the first checkpoint ahead of the
  // random baseline
  const CoverageMethodResult* baseline = result.find(Method::random);
  CsvWriter summary({"method", "mean_final_unique_cells", "mean_final_R_s",
                     "final_relative_increase_vs_random", "crossing_checkpoint"});
  for (const auto& mr : result.methods) {
    std::string rel = "";
    std::string crossing = "";
    if (baseline && mr.method != Method::random &&
        !mr.curve.mean_coverage.empty()) {
      const auto rels = relative_increase(mr.curve, baseline->curve);
      if (rels.back()) rel = format_real(*rels.back());
      if (const auto cross = first_positive_crossing(mr.curve, baseline->curve)) {
        crossing = std::to_string(*cross);
      }
    }
    const double final_rs =
        mr.curve.mean_coverage.empty() ? 0.0 : mr.curve.mean_coverage.back();
    summary.add_row({method_name(mr.method),
                     format_real(mr.mean_final_unique_cells),
                     format_real(final_rs), rel, crossing});
  }
  summary.write(dir / "summary.csv");
}

void write_goal_outputs(const GoalExperimentResult& result,
                        const std::filesystem::path& dir) {
  for (const auto& mr : result.methods) {
    const std::filesystem::path mdir = dir / method_name(mr.method);
    for (const auto& gr : mr.endpoints) {
      CsvWriter csv({"run", "steps", "censored"});
      for (std::size_t r = 0; r < gr.steps.size(); ++r) {
        csv.add_row({std::to_string(r), std::to_string(gr.steps[r]),
                     gr.censored[r] ? "1" : "0"});
      }
      csv.write(mdir / ("goal_" + std::to_string(gr.endpoint.x) + "_" +
                        std::to_string(gr.endpoint.y) + ".csv"));
    }
  }

  // Table-I-shaped summary: one row per endpoint plus an average row per method
  CsvWriter summary({"method", "endpoint", "mean", "median", "q1", "q3",
                     "censored_runs"});
  for (const auto& mr : result.methods) {
    int censored_total = 0;
    for (const auto& gr : mr.endpoints) {
      summary.add_row({method_name(mr.method),
                       std::to_string(gr.endpoint.x) + "_" +
                           std::to_string(gr.endpoint.y),
                       format_real(gr.summary.mean), format_real(gr.summary.median),
                       format_real(gr.summary.q1), format_real(gr.summary.q3),
                       std::to_string(gr.censored_count)});
      censored_total += gr.censored_count;
    }
    std::vector<double> medians, q1s, q3s;
    for (const auto& gr : mr.endpoints) {
      medians.push_back(gr.summary.median);
      q1s.push_back(gr.summary.q1);
      q3s.push_back(gr.summary.q3);
    }
    summary.add_row({method_name(mr.method), "average",
                     format_real(mr.endpoint_averaged_mean),
                     format_real(mean(medians)), format_real(mean(q1s)),
                     format_real(mean(q3s)), std::to_string(censored_total)});
  }
  summary.write(dir / "summary.csv");
}

void write_entropy_outputs(const EntropyExperimentResult& result,
                           const std::filesystem::path& dir) {
  CsvWriter summary({"scheme", "first_entropy", "final_entropy", "min_entropy",
                     "max_entropy"});
  for (const auto& curve : result.schemes) {
    CsvWriter csv({"update_index", "mean_entropy"});
    for (std::size_t u = 0; u < curve.mean_entropy.size(); ++u) {
      csv.add_row({std::to_string(u), format_real(curve.mean_entropy[u])});
    }
    csv.write(dir / curve.scheme / "curve.csv");

    double lo = curve.mean_entropy.empty() ? 0.0 : curve.mean_entropy.front();
    double hi = lo;
    for (double e : curve.mean_entropy) {
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    summary.add_row({curve.scheme,
                     curve.mean_entropy.empty()
                         ? ""
                         : format_real(curve.mean_entropy.front()),
                     curve.mean_entropy.empty()
                         ? ""
                         : format_real(curve.mean_entropy.back()),
                     format_real(lo), format_real(hi)});
  }
  summary.write(dir / "summary.csv");
}

}  // namespace abx

#include "abx/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "abx/csv.hpp"

namespace abx::cli {

namespace {

void add_common_options(CLI::App* sub, CliInvocation& inv, std::string& methods_csv,
                        std::string& endpoints_text, std::string& config_str,
                        std::string& out_str, long long& seed_val) {
  sub->add_option("--config", config_str, "key=value config file");
  sub->add_option("--set", inv.overrides,
                  "config override key=value (repeatable, applied after the file)");
  sub->add_option("--out", out_str, "output directory (env ABX_OUT_DIR, default out/)");
  sub->add_option("--seed", seed_val, "base seed; run i uses base_seed + i");
  sub->add_option("--runs", inv.runs, "independent seeded runs per method")
      ->check(CLI::PositiveNumber);
  sub->add_option("--episodes", inv.episodes, "episodes per run")
      ->check(CLI::PositiveNumber);
  sub->add_option("--methods", methods_csv,
                  "comma list: random,rnd,ab,ab_rnd (aliases accepted)");
  sub->add_option("--jobs", inv.jobs, "max concurrent runs (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--endpoints", endpoints_text,
                  "goal endpoints as x,y;x,y;... (goal subcommand)");
}

}  // namespace

CliInvocation parse_invocation(const std::vector<std::string>& args) {
  CliInvocation inv;
  std::string methods_csv, endpoints_text, config_str, out_str;
  long long seed_val = -1;

  CLI::App app{"abx - action-balance exploration lab for the reward-free grid world"};
  app.require_subcommand(1);
  const char* subs[] = {"coverage", "goal", "entropy", "demo"};
  const char* descs[] = {
      "state-coverage experiment (curves + heatmaps)",
      "steps-until-goal experiment over the five endpoints",
      "bonus-vector entropy curves per embedding scheme",
      "short traced action_balance_rnd run on stdout"};
  for (int i = 0; i < 4; ++i) {
    CLI::App* sub = app.add_subcommand(subs[i], descs[i]);
    add_common_options(sub, inv, methods_csv, endpoints_text, config_str,
                       out_str, seed_val);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream help;
    help << app.help();
    throw HelpRequested{help.str()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\n\n" + app.help());
  }

  inv.subcommand = app.get_subcommands().front()->get_name();
  if (!config_str.empty()) inv.config_path = config_str;
  if (!out_str.empty()) {
    inv.out_dir = out_str;
  } else if (const char* env_out = std::getenv("ABX_OUT_DIR");
             env_out && *env_out) {
    inv.out_dir = env_out;
  }
  if (seed_val >= 0) inv.base_seed = static_cast<std::uint64_t>(seed_val);
  try {
    if (!methods_csv.empty()) {
      inv.methods = parse_method_list(methods_csv, "--methods");
    }
    if (!endpoints_text.empty()) {
      inv.endpoints = parse_endpoint_list(endpoints_text, "--endpoints");
    }
  } catch (const ConfigError& e) {
    // malformed flag values are usage errors at the command line boundary
    throw UsageError(e.what());
  }
  return inv;
}

LabConfig resolve_config(const CliInvocation& inv) {
  LabConfig cfg = load_config(inv.config_path, inv.overrides);
  if (inv.runs) cfg.experiment.runs = *inv.runs;
  if (inv.episodes) cfg.experiment.episodes = *inv.episodes;
  if (inv.base_seed) cfg.experiment.base_seed = *inv.base_seed;
  if (inv.methods) cfg.experiment.methods = *inv.methods;
  if (inv.endpoints) cfg.experiment.endpoints = *inv.endpoints;

  if (inv.subcommand == "coverage") {
    cfg.experiment.kind = ExperimentKind::coverage;
    if (cfg.experiment.methods.empty()) {
      cfg.experiment.methods = {Method::random, Method::rnd,
                                Method::action_balance,
                                Method::action_balance_rnd};
    }
  } else if (inv.subcommand == "goal") {
    cfg.experiment.kind = ExperimentKind::goal;
    if (cfg.experiment.methods.empty()) {
      cfg.experiment.methods = {Method::random, Method::rnd,
                                Method::action_balance_rnd};
    }
  } else if (inv.subcommand == "entropy") {
    cfg.experiment.kind = ExperimentKind::entropy;
    if (cfg.experiment.methods.empty()) {
      cfg.experiment.methods = {Method::action_balance_rnd};
    }
  }
  return cfg;
}

namespace {

int run_demo(const LabConfig& base) {
  LabConfig cfg = base;
  cfg.agent.method = Method::action_balance_rnd;
  cfg.agent.seed = cfg.experiment.base_seed;

  GridWorld env(cfg.env);
  Agent agent(cfg.agent, cfg.env);

  constexpr int kEpisodes = 5;
  std::printf("demo: action_balance_rnd, %d episodes, grid %dx%d, seed %llu\n",
              kEpisodes, cfg.env.width, cfg.env.height,
              static_cast<unsigned long long>(cfg.agent.seed));
  for (int ep = 0; ep < kEpisodes; ++ep) {
    env.reset();
    std::vector<Transition> episode;
    while (!env.episode_done()) {
      const GridPos s = env.state();
      const ActResult ar = agent.act(s);
      const StepResult sr = env.step(ar.action);
      double intrinsic = 0.0;
      if (agent.novelty()) {
        intrinsic = agent.novelty()->intrinsic_bonus(sr.next_state);
        agent.novelty()->observe(sr.next_state);
      }
      const CombinedReward r = combine(sr.reward, intrinsic);

      Transition tr;
      tr.state = s;
      tr.action = ar.action;
      tr.combined_reward = r.combined;
      tr.next_state = sr.next_state;
      tr.done = sr.done;
      tr.behavior_prob = ar.behavior_prob;
      tr.value_estimate = agent.state_value(s);
      tr.bonus_entropy =
          ar.bonus ? bonus_entropy(*ar.bonus)
                   : std::numeric_limits<double>::quiet_NaN();
      episode.push_back(tr);

      std::string bonus_text = "-";
      if (ar.bonus) {
        bonus_text = "[";
        for (std::size_t i = 0; i < ar.bonus->values.size(); ++i) {
          if (i) bonus_text += ' ';
          char buf[24];
          std::snprintf(buf, sizeof(buf), "%.4f", ar.bonus->values[i]);
          bonus_text += buf;
        }
        bonus_text += "]";
      }
      std::printf("ep %d step %3d (%2d,%2d) %-5s -> (%2d,%2d) r'=%.4f bonus=%s\n",
                  ep, sr.info_steps_in_episode, s.x, s.y,
                  kActionNames[static_cast<std::size_t>(ar.action)],
                  sr.next_state.x, sr.next_state.y, r.combined,
                  bonus_text.c_str());
    }
    const UpdateReport report = agent.update(episode);
    std::printf("ep %d update: l_p=%.5f ab=%.5f nov=%.5f l_t=%.5f H=%.4f\n", ep,
                report.policy_loss, report.action_balance_loss,
                report.novelty_loss, report.total_loss,
                report.mean_bonus_entropy);
  }
  return 0;
}

}  // namespace

int run(const CliInvocation& inv) {
  LabConfig cfg = resolve_config(inv);

  if (inv.subcommand == "demo") return run_demo(cfg);

  RunOptions options;
  options.jobs = inv.jobs;
  options.out_dir = inv.out_dir / inv.subcommand;
  options.write_update_logs = cfg.write_update_logs;

  if (inv.subcommand == "coverage") {
    const auto result = run_coverage(cfg.experiment, cfg.env, cfg.agent, options);
    write_coverage_outputs(result, options.out_dir);
    for (const auto& mr : result.methods) {
      const double final_rs =
          mr.curve.mean_coverage.empty() ? 0.0 : mr.curve.mean_coverage.back();
      std::printf("coverage %-18s mean final R_s=%.4f (%.1f cells) over %d runs\n",
                  method_name(mr.method), final_rs, mr.mean_final_unique_cells,
                  cfg.experiment.runs);
    }
    return 0;
  }

  if (inv.subcommand == "goal") {
    const auto result = run_goal(cfg.experiment, cfg.env, cfg.agent, options);
    write_goal_outputs(result, options.out_dir);
    int censored = 0;
    for (const auto& mr : result.methods) {
      int method_censored = 0;
      for (const auto& gr : mr.endpoints) method_censored += gr.censored_count;
      censored += method_censored;
      std::printf("goal %-18s endpoint-averaged mean steps=%.1f (censored %d/%zu)\n",
                  method_name(mr.method), mr.endpoint_averaged_mean,
                  method_censored,
                  mr.endpoints.size() * static_cast<std::size_t>(cfg.experiment.runs));
    }
    if (censored > 0 && !cfg.experiment.allow_censored) {
      std::fprintf(stderr, "%d run(s) hit the %ld-step cap and censoring is not permitted\n",
                   censored, cfg.experiment.goal_step_cap);
      return 1;
    }
    return 0;
  }

  if (inv.subcommand == "entropy") {
    const auto result = run_entropy(cfg.experiment, cfg.env, cfg.agent, options);
    write_entropy_outputs(result, options.out_dir);
    for (const auto& curve : result.schemes) {
      std::printf("entropy %-15s first=%.4f final=%.4f over %zu updates\n",
                  curve.scheme.c_str(),
                  curve.mean_entropy.empty() ? 0.0 : curve.mean_entropy.front(),
                  curve.mean_entropy.empty() ? 0.0 : curve.mean_entropy.back(),
                  curve.mean_entropy.size());
    }
    return 0;
  }

  throw UsageError("unknown subcommand '" + inv.subcommand + "'");
}

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    const CliInvocation inv = parse_invocation(args);
    return run(inv);
  } catch (const HelpRequested& h) {
    std::cout << h.text;
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace abx::cli

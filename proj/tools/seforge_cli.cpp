// seforge: learn synthetic environments with NES and run the evaluation suites.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error, 3 verify failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "seforge/config.hpp"
#include "seforge/error.hpp"
#include "seforge/experiments.hpp"
#include "seforge/histogram.hpp"
#include "seforge/nes.hpp"
#include "seforge/synthetic_env.hpp"
#include "seforge/verify.hpp"

namespace fs = std::filesystem;
using namespace seforge;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitVerify = 3;

struct Globals {
  std::string config;
  std::string env = "cartpole";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string out = "runs";
};

ExperimentConfig resolve_config(const Globals& g) {
  if (!g.config.empty()) return load_experiment_config(g.config);
  const TaskSpec task = task_by_name(g.env);
  return task.kind == TaskKind::Acrobot ? acrobot_preset() : cartpole_preset();
}

std::size_t resolve_workers(const Globals& g) {
  if (const char* env = std::getenv("SEFORGE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("SEFORGE_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max<std::size_t>(1, g.workers);
}

fs::path prepare_out(const Globals& g) {
  fs::path out(g.out);
  fs::create_directories(out);
  return out;
}

std::vector<NamedSe> load_ses(const std::string& path, const TaskSpec& task, std::size_t limit) {
  if (fs::is_directory(path)) {
    auto ses = load_se_directory(path, task, limit);
    if (ses.empty()) throw CheckpointError("no SE checkpoints in " + path);
    return ses;
  }
  return {NamedSe{fs::path(path).stem().string(), std::make_shared<const SyntheticEnvSpec>(load_se(path, task))}};
}

SuiteOptions suite_options(const ExperimentConfig& cfg, AgentKind kind, const Globals& g, std::size_t n_agents,
                           bool fixed_hps) {
  SuiteOptions o;
  o.base = cfg.agent(kind);
  o.vary_hps = !fixed_hps;
  o.n_agents = n_agents;
  o.n_test = cfg.test_episodes;
  o.train = cfg.train;
  o.seed = g.seed;
  o.workers = resolve_workers(g);
  return o;
}

void write_suite(const fs::path& out, std::span<const EvalRecord> records, const TaskSpec& task,
                 const nlohmann::json& extra) {
  write_evals_csv(out / "evals.csv", records);
  const SuiteSummary s = summarize(records, task);
  write_summary_json(out / "summary.json", s, extra);
  std::cout << to_json(s).dump(2) << "\n";
}

int cmd_train_se(const Globals& g, std::optional<std::size_t> outer_loops, std::optional<std::size_t> population,
                 const std::string& init_se) {
  ExperimentConfig cfg = resolve_config(g);
  if (outer_loops) cfg.nes.outer_loops = *outer_loops;
  if (population) cfg.nes.population_size = *population;
  cfg.nes.workers = resolve_workers(g);
  cfg.nes.validate();
  const fs::path out = prepare_out(g);
  std::ofstream(out / "config.cfg") << to_config_text(cfg);

  Rng init_rng = make_rng(g.seed, {0x696e6974ULL});
  SyntheticEnvSpec initial = init_se.empty()
                                 ? make_synthetic_env(cfg.task, cfg.se_hidden_sizes, cfg.se_activation, init_rng)
                                 : load_se(init_se, cfg.task);
  const MemberEvaluator evaluate =
      make_train_evaluate(AgentConfigSource{cfg.ddqn, cfg.hp_variation, HpSampler{}}, cfg.train, cfg.test_episodes);

  std::ofstream log(out / "run_log.jsonl");
  std::optional<double> best;
  NesRunOptions opts;
  opts.run_seed = g.seed;
  opts.on_generation = [&](const GenerationReport& r, const SyntheticEnvSpec& mean) {
    log << to_json(r).dump() << "\n";
    log.flush();
    if (r.mean_eval && (!best || *r.mean_eval >= *best)) {
      best = *r.mean_eval;
      save_se(mean, out / "best_se.json");
    }
    if (r.mean_eval && *r.mean_eval >= cfg.task.solved_reward) {
      save_se(mean, out / "solved" / fmt::format("gen_{:04d}.json", r.generation));
    }
    std::cerr << "generation " << r.generation << ": mean eval "
              << (r.mean_eval ? std::to_string(*r.mean_eval) : std::string("-")) << ", wall "
              << static_cast<long>(r.wall_ms) << " ms\n";
  };
  const NesResult result = run_nes(cfg.nes, std::move(initial), evaluate, opts);
  save_se(result.best, out / "best_se.json");
  save_se(result.final_mean, out / "final_se.json");
  std::cout << "generations " << result.generations.size() << (result.stopped_early ? " (stopped early)" : "")
            << ", best mean eval " << result.best.meta.eval_score << "\n";
  return 0;
}

int cmd_robustness(const Globals& g, const std::string& se_path, std::size_t n_se, std::size_t n_agents,
                   const std::string& agent, bool fixed_hps) {
  const ExperimentConfig cfg = resolve_config(g);
  const auto ses = load_ses(se_path, cfg.task, n_se);
  const fs::path out = prepare_out(g);
  const auto records = suite_robustness(ses, suite_options(cfg, parse_agent_kind(agent), g, n_agents, fixed_hps));
  write_suite(out, records, cfg.task, {{"suite", "robustness"}, {"n_se", ses.size()}});
  return 0;
}

int cmd_transfer(const Globals& g, const std::string& se_path, std::size_t n_se, std::size_t n_agents,
                 const std::string& target, bool fixed_hps) {
  const ExperimentConfig cfg = resolve_config(g);
  const AgentKind kind = parse_agent_kind(target);
  const auto ses = load_ses(se_path, cfg.task, n_se);
  const fs::path out = prepare_out(g);
  const auto records = suite_transfer(ses, kind, suite_options(cfg, kind, g, n_agents, fixed_hps));
  write_suite(out, records, cfg.task, {{"suite", "transfer"}, {"target", to_string(kind)}, {"n_se", ses.size()}});
  return 0;
}

int cmd_baseline(const Globals& g, std::size_t n, const std::string& agent, bool fixed_hps) {
  const ExperimentConfig cfg = resolve_config(g);
  const fs::path out = prepare_out(g);
  const auto records = suite_baseline(cfg.task, n, suite_options(cfg, parse_agent_kind(agent), g, n, fixed_hps));
  write_suite(out, records, cfg.task, {{"suite", "baseline"}});
  return 0;
}

int cmd_histograms(const Globals& g, const std::string& se_path, std::size_t n_agents) {
  const ExperimentConfig cfg = resolve_config(g);
  const auto se = std::make_shared<const SyntheticEnvSpec>(load_se(se_path, cfg.task));
  const fs::path out = prepare_out(g);

  HistogramOptions opts;
  opts.agent = cfg.ddqn;
  opts.n_agents = n_agents;
  opts.n_test = cfg.test_episodes;
  opts.train = cfg.train;
  opts.seed = g.seed;
  opts.workers = resolve_workers(g);
  const HistogramCollection c = collect_transition_samples(se, opts);

  const auto names = dimension_names(cfg.task);
  const std::string task_tag = cfg.task.kind == TaskKind::Acrobot ? "acrobot" : "cartpole";
  nlohmann::json report = nlohmann::json::object();
  report["test_means"] = c.test_means;
  for (std::size_t d = 0; d < c.samples.dims(); ++d) {
    const Histogram h = bin_pooled(c.samples.se_train[d], c.samples.real_test[d], c.samples.se_replayed[d]);
    const std::string stem = "hist_" + task_tag + "_" + names[d];
    write_histogram_csv(out / (stem + ".csv"), h);
    write_histogram_svg(out / (stem + ".svg"), h, cfg.task.name + " " + names[d]);
    report["dimensions"][names[d]] = {
        {"occupied_blue", occupied_bins(h.se_train)},
        {"occupied_orange", occupied_bins(h.real_test)},
        {"occupied_green", occupied_bins(h.se_replayed)},
        {"w1_green_blue", wasserstein1(c.samples.se_replayed[d], c.samples.se_train[d])},
        {"w1_green_orange", wasserstein1(c.samples.se_replayed[d], c.samples.real_test[d])},
    };
  }
  std::ofstream(out / "histograms.json") << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_verify(const std::string& fixture_dir) {
  const auto results = verify::run_quick_checks(fixture_dir.empty() ? verify::default_fixture_dir() : fs::path(fixture_dir));
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.seconds << " s): " << r.detail << "\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn synthetic environments with NES and evaluate agents trained on them"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config file")->check(CLI::ExistingFile);
  app.add_option("--env", g.env, "Task preset when no config is given (cartpole, acrobot)");
  app.add_option("--seed", g.seed, "Run seed");
  app.add_option("--workers", g.workers, "Worker threads (SEFORGE_THREADS overrides)");
  app.add_option("--out", g.out, "Output directory");
  app.fallthrough();

  std::optional<std::size_t> outer_loops, population;
  auto* train = app.add_subcommand("train-se", "Search for an SE with NES");
  train->add_option("--outer-loops", outer_loops, "Override the number of NES generations");
  train->add_option("--population", population, "Override the population size");
  std::string init_se;
  train->add_option("--init-se", init_se, "Start the search from this SE checkpoint")->check(CLI::ExistingFile);

  std::string se_path, agent = "ddqn", target = "dueling_ddqn";
  std::size_t n_se = 40, n_agents = 10, n_baseline = 400;
  bool fixed_hps = false;
  auto add_suite_flags = [&](CLI::App* sub) {
    sub->add_option("--n-agents", n_agents, "Agents per SE");
    sub->add_flag("--fixed-hps", fixed_hps, "Use the configured agent HPs instead of sampling them");
  };

  auto* eval = app.add_subcommand("eval-se", "Train and test agents on one SE checkpoint");
  eval->add_option("--se", se_path, "SE checkpoint")->required();
  eval->add_option("--agent", agent, "ddqn, dueling_ddqn or td3");
  add_suite_flags(eval);

  auto* robust = app.add_subcommand("robustness", "Agents with varied HPs on a set of SEs");
  robust->add_option("--se-dir", se_path, "Directory of SE checkpoints")->required();
  robust->add_option("--n-se", n_se, "Maximum number of SEs");
  robust->add_option("--agent", agent, "ddqn, dueling_ddqn or td3");
  add_suite_flags(robust);

  auto* transfer = app.add_subcommand("transfer", "Train a different agent kind on the SEs");
  transfer->add_option("--se-dir", se_path, "Directory of SE checkpoints")->required();
  transfer->add_option("--n-se", n_se, "Maximum number of SEs");
  transfer->add_option("--target", target, "dueling_ddqn or td3");
  add_suite_flags(transfer);

  auto* baseline = app.add_subcommand("baseline", "Agents trained on the real task");
  baseline->add_option("--n", n_baseline, "Number of agents");
  baseline->add_option("--agent", agent, "ddqn, dueling_ddqn or td3");
  baseline->add_flag("--fixed-hps", fixed_hps, "Use the configured agent HPs instead of sampling them");

  auto* hist = app.add_subcommand("histograms", "Next-state and reward histograms for one SE");
  hist->add_option("--se", se_path, "SE checkpoint")->required();
  hist->add_option("--n-agents", n_agents, "Agents to train on the SE");

  std::string fixture_dir;
  auto* verify_cmd = app.add_subcommand("verify", "Run the oracle checks");
  verify_cmd->add_option("--fixtures", fixture_dir, "Reference trajectory directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train_se(g, outer_loops, population, init_se);
    if (eval->parsed()) return cmd_robustness(g, se_path, 1, n_agents, agent, fixed_hps);
    if (robust->parsed()) return cmd_robustness(g, se_path, n_se, n_agents, agent, fixed_hps);
    if (transfer->parsed()) return cmd_transfer(g, se_path, n_se, n_agents, target, fixed_hps);
    if (baseline->parsed()) return cmd_baseline(g, n_baseline, agent, fixed_hps);
    if (hist->parsed()) return cmd_histograms(g, se_path, n_agents);
    if (verify_cmd->parsed()) return cmd_verify(fixture_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

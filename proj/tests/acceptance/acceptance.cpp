// Acceptance runner: one PASS/FAIL line per requested criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "seforge/config.hpp"
#include "seforge/experiments.hpp"
#include "seforge/histogram.hpp"
#include "seforge/nes.hpp"
#include "seforge/verify.hpp"

namespace fs = std::filesystem;
using namespace seforge;

namespace {

struct Context {
  fs::path fixtures;
  fs::path accepted_se;
  fs::path out;
  std::size_t workers = 1;
};

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Outcome(const Context&)> run;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Outcome from_check(const verify::CheckResult& r) { return {r.passed, r.detail}; }

SuiteOptions default_ddqn_suite(std::size_t n_agents, std::uint64_t seed, std::size_t workers) {
  SuiteOptions o;
  o.base = default_agent_config(AgentKind::DDQN);
  o.vary_hps = false;
  o.n_agents = n_agents;
  o.n_test = kTestEpisodes;
  o.train.max_episodes = kMaxTrainEpisodes;
  o.seed = seed;
  o.workers = workers;
  return o;
}

std::size_t count_solved(std::span<const EvalRecord> records, const TaskSpec& task) {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const EvalRecord& r) {
    return r.mean_return >= task.solved_reward;
  }));
}

std::string means_list(std::span<const EvalRecord> records) {
  std::string s;
  for (const auto& r : records) s += fmt::format("{}{:.1f}", s.empty() ? "" : " ", r.mean_return);
  return s;
}

std::optional<std::shared_ptr<const SyntheticEnvSpec>> load_accepted(const Context& ctx, Outcome& fail) {
  if (!fs::exists(ctx.accepted_se)) {
    fail = {false, fmt::format("no accepted SE checkpoint at {}", ctx.accepted_se.string())};
    return std::nullopt;
  }
  return std::make_shared<const SyntheticEnvSpec>(load_se(ctx.accepted_se, cartpole_task()));
}

// --- criteria ------------------------------------------------------------------

Outcome small_mdp(const Context&) {
  const auto t0 = Clock::now();
  const verify::QTable q_star = verify::two_state_q_star(verify::kTwoStateGamma);
  const std::array<std::size_t, 2> optimal{q_star[0][1] > q_star[0][0] ? 1u : 0u, q_star[1][1] > q_star[1][0] ? 1u : 0u};
  std::size_t ok = 0;
  std::size_t total = 0;
  std::string misses;
  for (AgentKind kind : {AgentKind::DDQN, AgentKind::DuelingDDQN, AgentKind::DiscreteTD3}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const verify::TwoStateOutcome o = verify::train_two_state(kind, seed);
      ++total;
      if (o.greedy == optimal && o.env_steps <= 5000) {
        ++ok;
      } else {
        misses += fmt::format(" {}/seed{}", to_string(kind), seed);
      }
    }
  }
  const double secs = seconds_since(t0);
  return {ok == total && secs < 60.0,
          fmt::format("{}/{} runs greedy-optimal (optimal actions {},{}) in {:.1f} s{}", ok, total, optimal[0],
                      optimal[1], secs, misses.empty() ? "" : ";" + misses)};
}

Outcome baseline_reproduction(const Context& ctx) {
  const auto t0 = Clock::now();
  const TaskSpec task = cartpole_task();
  const auto records = suite_baseline(task, 5, default_ddqn_suite(1, 6, ctx.workers));
  const double secs = seconds_since(t0);
  const std::size_t solved = count_solved(records, task);
  std::string episodes;
  for (const auto& r : records) episodes += fmt::format(" {}", r.episodes_used);
  return {solved >= 4 && secs < 900.0,
          fmt::format("{}/5 seeds solved (test means {}; episodes{}) in {:.0f} s", solved, means_list(records),
                      episodes, secs)};
}

Outcome se_learning(const Context& ctx) {
  const auto t0 = Clock::now();
  const TaskSpec task = cartpole_task();
  std::string log;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    ExperimentConfig cfg = cartpole_preset();
    cfg.nes.population_size = 16;
    cfg.nes.outer_loops = 100;
    cfg.nes.solved_streak = cfg.nes.outer_loops + 1;  // only the default-agent check below ends a run
    cfg.nes.workers = ctx.workers;
    Rng init_rng = make_rng(seed, {0x696e6974ULL});
    SyntheticEnvSpec initial = make_synthetic_env(task, cfg.se_hidden_sizes, cfg.se_activation, init_rng);
    const MemberEvaluator evaluate =
        make_train_evaluate(AgentConfigSource{cfg.ddqn, false, HpSampler{}}, cfg.train, cfg.test_episodes);

    std::optional<std::size_t> accepted_at;
    double accepted_mean = 0.0;
    NesRunOptions options;
    options.run_seed = seed;
    options.should_stop = [&](const GenerationReport& r, const SyntheticEnvSpec& mean) {
      if (!r.mean_eval || *r.mean_eval < task.solved_reward) return false;
      const std::vector<NamedSe> ses{{"candidate", std::make_shared<const SyntheticEnvSpec>(mean)}};
      const auto records = suite_robustness(ses, default_ddqn_suite(5, derive_seed(seed, {r.generation}), ctx.workers));
      const SuiteSummary s = summarize(records, task);
      std::cerr << fmt::format("criterion 7: seed {} generation {} candidate, default agents mean {:.1f}\n", seed,
                               r.generation, s.mean_return);
      if (s.mean_return < task.solved_reward) return false;
      accepted_at = r.generation;
      accepted_mean = s.mean_return;
      fs::create_directories(ctx.out);
      save_se(mean, ctx.out / fmt::format("se_search_seed{}.json", seed));
      return true;
    };
    const NesResult result = run_nes(cfg.nes, std::move(initial), evaluate, options);
    if (accepted_at) {
      return {true, fmt::format("seed {} accepted at generation {} (default-agent mean {:.1f}) after {:.0f} s", seed,
                                *accepted_at, accepted_mean, seconds_since(t0))};
    }
    log += fmt::format(" seed {}: best mean eval {:.1f} in {} generations;", seed, result.best.meta.eval_score,
                       result.generations.size());
  }
  return {false, fmt::format("no run produced an SE for default agents:{} {:.0f} s", log, seconds_since(t0))};
}

Outcome efficiency(const Context& ctx) {
  Outcome fail;
  const auto se = load_accepted(ctx, fail);
  if (!se) return fail;
  const TaskSpec task = cartpole_task();
  const std::vector<NamedSe> ses{{"accepted", *se}};
  const auto on_se = suite_robustness(ses, default_ddqn_suite(10, 8, ctx.workers));
  const auto on_real = suite_baseline(task, 10, default_ddqn_suite(1, 8, ctx.workers));
  const SuiteSummary s_se = summarize(on_se, task);
  const SuiteSummary s_real = summarize(on_real, task);
  const double reduction = 1.0 - s_se.mean_steps / s_real.mean_steps;
  const double reduction_all = 1.0 - s_se.mean_steps / (s_real.mean_steps + s_real.mean_eval_steps);
  const std::size_t solved = count_solved(on_se, task);
  return {reduction >= 0.25 && solved == 10,
          fmt::format("SE agents {:.0f} train steps vs real {:.0f} ({:.1f}% fewer; {:.1f}% counting the real stop-rule "
                      "test episodes; reference value 60%), {}/10 SE agents solved (test means {})",
                      s_se.mean_steps, s_real.mean_steps, 100.0 * reduction, 100.0 * reduction_all, solved,
                      means_list(on_se))};
}

Outcome transfer(const Context& ctx) {
  Outcome fail;
  const auto se = load_accepted(ctx, fail);
  if (!se) return fail;
  const TaskSpec task = cartpole_task();
  const std::vector<NamedSe> ses{{"accepted", *se}};
  SuiteOptions dueling = default_ddqn_suite(10, 9, ctx.workers);
  dueling.base = default_agent_config(AgentKind::DuelingDDQN);
  const auto d = suite_robustness(ses, dueling);
  SuiteOptions td3 = dueling;
  td3.base = default_agent_config(AgentKind::DiscreteTD3);
  const auto t = suite_robustness(ses, td3);
  const std::size_t solved = count_solved(d, task);
  return {solved >= 8, fmt::format("Dueling DDQN {}/10 solved (test means {}); TD3 {}/10 solved, not gated (test means {})",
                                   solved, means_list(d), count_solved(t, task), means_list(t))};
}

Outcome histogram_property(const Context& ctx) {
  Outcome fail;
  const auto se = load_accepted(ctx, fail);
  if (!se) return fail;
  HistogramOptions options;
  options.agent = default_agent_config(AgentKind::DDQN);
  options.n_agents = 10;
  options.seed = 10;
  options.workers = ctx.workers;
  const HistogramCollection c = collect_transition_samples(*se, options);
  const TransitionSamples& s = c.samples;
  const std::size_t reward = s.dims() - 1;
  const Histogram h = bin_pooled(s.se_train[reward], s.real_test[reward], s.se_replayed[reward]);
  const std::size_t synthetic_bins = occupied_bins(h.se_train);
  const std::size_t real_bins = occupied_bins(h.real_test);
  std::size_t closer = 0;
  std::string dims;
  const auto names = dimension_names(cartpole_task());
  for (std::size_t d = 0; d < reward; ++d) {
    const double w_blue = wasserstein1(s.se_replayed[d], s.se_train[d]);
    const double w_orange = wasserstein1(s.se_replayed[d], s.real_test[d]);
    if (w_blue <= w_orange) ++closer;
    dims += fmt::format(" {} {:.4g}/{:.4g}", names[d], w_blue, w_orange);
  }
  return {synthetic_bins > 1 && real_bins == 1 && closer >= 3,
          fmt::format("reward bins synthetic {} real {}; green-blue <= green-orange in {}/4 dims (W1 blue/orange:{})",
                      synthetic_bins, real_bins, closer, dims)};
}

Outcome determinism(const Context&) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = cartpole_preset();
  cfg.nes.outer_loops = 2;
  cfg.nes.population_size = 4;
  cfg.train.max_episodes = 5;
  const MemberEvaluator evaluate =
      make_train_evaluate(AgentConfigSource{cfg.ddqn, false, HpSampler{}}, cfg.train, cfg.test_episodes);
  auto run = [&](std::size_t workers) {
    NesConfig nes = cfg.nes;
    nes.workers = workers;
    Rng init_rng(11);
    SyntheticEnvSpec initial = make_synthetic_env(cfg.task, cfg.se_hidden_sizes, cfg.se_activation, init_rng);
    return run_nes(nes, std::move(initial), evaluate, NesRunOptions{11, {}, {}});
  };
  const NesResult serial = run(1);
  const NesResult parallel = run(4);
  bool same = serial.final_mean.params.values == parallel.final_mean.params.values &&
              serial.best.params.values == parallel.best.params.values &&
              serial.generations.size() == parallel.generations.size();
  for (std::size_t g = 0; same && g < serial.generations.size(); ++g) {
    same = serial.generations[g].scores == parallel.generations[g].scores &&
           serial.generations[g].mean_eval == parallel.generations[g].mean_eval;
  }
  const double secs = seconds_since(t0);
  return {same && secs < 60.0, fmt::format("serial vs 4 workers {} over {} generations, {:.1f} s",
                                           same ? "bit-identical" : "DIFFER", serial.generations.size(), secs)};
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, comma - start);
    if (!item.empty()) out.push_back(std::stoul(item));
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string criteria = "1,2,3,4,5,6,7,8,9,10,11";
  Context ctx;
  ctx.fixtures = verify::default_fixture_dir();
  if (const char* env = std::getenv("SEFORGE_ACCEPTED_SE")) {
    ctx.accepted_se = env;
  } else {
    ctx.accepted_se = verify::default_data_dir() / "se" / "cartpole_accepted.json";
  }
  ctx.out = "acceptance_out";
  if (const char* env = std::getenv("SEFORGE_THREADS")) ctx.workers = std::max(1, std::atoi(env));
  app.add_option("--criteria", criteria, "Comma-separated criterion numbers");
  app.add_option("--fixtures", ctx.fixtures, "Reference trajectory directory");
  app.add_option("--accepted-se", ctx.accepted_se, "Accepted CartPole SE checkpoint");
  app.add_option("--out", ctx.out, "Directory for artifacts of the SE search");
  app.add_option("--workers", ctx.workers, "Worker threads");
  CLI11_PARSE(app, argc, argv);

  const std::map<std::size_t, Criterion> all{
      {1, {"physics oracle", [](const Context& c) { return from_check(verify::check_physics_oracle(c.fixtures)); }}},
      {2, {"gradient checks", [](const Context&) { return from_check(verify::check_gradients(2)); }}},
      {3, {"NES math", [](const Context&) { return from_check(verify::check_nes_math()); }}},
      {4, {"stop heuristics", [](const Context&) { return from_check(verify::check_stop_heuristics()); }}},
      {5, {"small-MDP oracle", small_mdp}},
      {6, {"baseline reproduction", baseline_reproduction}},
      {7, {"SE learning", se_learning}},
      {8, {"efficiency", efficiency}},
      {9, {"transfer", transfer}},
      {10, {"histogram property", histogram_property}},
      {11, {"determinism", determinism}},
  };

  std::vector<std::size_t> selected;
  try {
    selected = parse_list(criteria);
  } catch (const std::exception&) {
    std::cerr << "bad --criteria list: " << criteria << "\n";
    return 2;
  }
  bool all_passed = true;
  for (std::size_t id : selected) {
    const auto it = all.find(id);
    if (it == all.end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = it->second.run(ctx);
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    all_passed = all_passed && o.passed;
    std::cout << fmt::format("{} criterion {} ({}, {:.2f} s): {}", o.passed ? "PASS" : "FAIL", id, it->second.name,
                             seconds_since(t0), o.detail)
              << std::endl;
  }
  return all_passed ? 0 : 1;
}

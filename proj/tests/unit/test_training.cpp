#include <doctest.h>

#include <numeric>

#include "seforge/agents.hpp"
#include "seforge/error.hpp"
#include "seforge/synthetic_env.hpp"
#include "seforge/training.hpp"
#include "seforge/verify.hpp"

using namespace seforge;

namespace {

AgentConfig small_ddqn() {
  AgentConfig cfg = default_agent_config();
  cfg.hidden_layers = 1;
  cfg.hidden_size = 8;
  cfg.batch_size = 16;
  cfg.initial_episodes = 1;
  return cfg;
}

// Acts from a fixed rule; training is a no-op.
class ScriptedAgent final : public Agent {
 public:
  ScriptedAgent(const TaskSpec& task, Policy policy, std::size_t initial_episodes = 0)
      : Agent(with_warmup(initial_episodes), task, 7), policy_(std::move(policy)) {}

  AgentKind kind() const override { return AgentKind::DDQN; }
  ActionChoice act(std::span<const double> obs, ActMode) override { return {policy_(obs), {}}; }
  std::optional<double> train_step() override {
    ++train_calls;
    return std::nullopt;
  }

  std::size_t train_calls = 0;

 private:
  static AgentConfig with_warmup(std::size_t n) {
    AgentConfig cfg = default_agent_config();
    cfg.initial_episodes = n;
    return cfg;
  }
  Policy policy_;
};

std::size_t balance(std::span<const double> s) { return s[2] + 0.5 * s[3] + 0.01 * s[0] + 0.1 * s[1] > 0.0 ? 1 : 0; }

}  // namespace

TEST_CASE("zero-parameter SE converges after exactly 2d episodes") {
  Rng rng(3);
  SyntheticEnvSpec spec = make_synthetic_env(cartpole_task(), {8}, Activation::ReLU, rng);
  for (double& v : spec.params.values) v = 0.0;
  SyntheticEnv env(std::make_shared<const SyntheticEnvSpec>(spec));
  auto agent = make_agent(small_ddqn(), spec.task, 1);

  const TrainReport report = train_agent(*agent, env, TrainOptions{}, rng);
  CHECK(report.stop_cause == StopCause::Converged);
  CHECK(report.episodes_used == 2 * kDefaultWindow);
  CHECK(report.env_steps_used == 2 * kDefaultWindow * 200);
  CHECK(report.eval_steps_used == 0);
  CHECK(report.test_returns.empty());
  for (double r : report.episode_returns) CHECK(r == 0.0);
}

TEST_CASE("a solving policy stops real-env training after d episodes") {
  CartPoleEnv env;
  ScriptedAgent agent(cartpole_task(), balance);
  Rng rng(11);
  const TrainReport report = train_agent(agent, env, TrainOptions{}, rng);
  CHECK(report.stop_cause == StopCause::Solved);
  CHECK(report.episodes_used == kDefaultWindow);
  REQUIRE(report.test_returns.size() == kDefaultWindow);
  CHECK(std::accumulate(report.test_returns.begin(), report.test_returns.end(), 0.0) == 2000.0);
  CHECK(report.eval_steps_used == 2000);
  CHECK(agent.train_calls == report.env_steps_used);
}

TEST_CASE("with heuristics off training runs to the episode cap") {
  verify::TwoStateMdp env(20);
  auto agent = make_agent(small_ddqn(), env.task(), 2);
  TrainOptions options;
  options.max_episodes = 30;
  options.heuristics = false;
  std::size_t observed = 0;
  options.on_transition = [&](const Transition&) { ++observed; };
  Rng rng(5);
  const TrainReport report = train_agent(*agent, env, options, rng);
  CHECK(report.stop_cause == StopCause::MaxEpisodes);
  CHECK(report.episodes_used == 30);
  CHECK(report.env_steps_used == 600);
  CHECK(observed == 600);
  CHECK(agent->buffer().size() == 600);
  CHECK(report.episode_returns.size() == 30);
}

TEST_CASE("env steps are the sum of episode lengths") {
  CartPoleEnv env;
  const auto random_policy = [](std::span<const double>) { return std::size_t{0}; };
  ScriptedAgent agent(cartpole_task(), random_policy, 4);
  TrainOptions options;
  options.max_episodes = 12;
  options.heuristics = false;
  Rng rng(8);
  const TrainReport report = train_agent(agent, env, options, rng);
  // Each CartPole step pays +1, so the returns are the episode lengths.
  const double total = std::accumulate(report.episode_returns.begin(), report.episode_returns.end(), 0.0);
  CHECK(static_cast<double>(report.env_steps_used) == total);
  // Warm-up episodes collect data without training.
  const double warm = std::accumulate(report.episode_returns.begin(), report.episode_returns.begin() + 4, 0.0);
  CHECK(static_cast<double>(agent.train_calls) == total - warm);
}

TEST_CASE("evaluation does not train or store transitions") {
  auto agent = make_agent(small_ddqn(), cartpole_task(), 4);
  auto& ddqn = dynamic_cast<DdqnAgent&>(*agent);
  const FlatParams before = ddqn.learner().net.online;
  Rng rng(9);
  const EvalResult result = evaluate_agent(*agent, cartpole_task(), 5, rng);
  CHECK(result.returns.size() == 5);
  CHECK(ddqn.learner().net.online.values == before.values);
  CHECK(agent->buffer().size() == 0);
  CHECK(static_cast<double>(result.steps) == std::accumulate(result.returns.begin(), result.returns.end(), 0.0));
}

TEST_CASE("a uniformly random policy scores between 10 and 60 on CartPole") {
  Rng pick(21);
  ScriptedAgent agent(cartpole_task(), [&](std::span<const double>) {
    return std::uniform_int_distribution<std::size_t>(0, 1)(pick);
  });
  Rng rng(22);
  const EvalResult result = evaluate_agent(agent, cartpole_task(), 100, rng);
  CHECK(result.mean >= 10.0);
  CHECK(result.mean <= 60.0);
}

TEST_CASE("greedy episodes respect the episode cap") {
  verify::TwoStateMdp env(7);
  ScriptedAgent agent(env.task(), [](std::span<const double>) { return std::size_t{1}; });
  Rng rng(1);
  std::size_t seen = 0;
  const auto [ret, steps] = run_greedy_episode(agent, env, rng, [&](const Transition&) { ++seen; });
  CHECK(steps == 7);
  CHECK(seen == 7);
  CHECK(std::isfinite(ret));
}

#include <algorithm>
#include <cmath>

#include "seforge/agents.hpp"
#include "seforge/error.hpp"
#include "seforge/training.hpp"
#include "seforge/verify.hpp"

namespace seforge::verify {

TwoStateMdp::TwoStateMdp(std::size_t episode_length)
    : task_{TaskKind::Custom, "TwoStateMdp", 2, 2, episode_length, 2.0 * static_cast<double>(episode_length)} {}

std::vector<double> TwoStateMdp::observation(std::size_t s) { return s == 0 ? std::vector{1.0, 0.0} : std::vector{0.0, 1.0}; }

double TwoStateMdp::reward(std::size_t s, std::size_t a) {
  static constexpr double r[2][2] = {{0.0, 1.0}, {2.0, 0.0}};
  return r[s][a];
}

std::size_t TwoStateMdp::next(std::size_t s, std::size_t a) { return a == 0 ? s : 1 - s; }

std::vector<double> TwoStateMdp::reset(Rng& rng) {
  current_ = std::uniform_int_distribution<std::size_t>(0, 1)(rng);
  state_.observation = observation(current_);
  state_.step_count = 0;
  active_ = true;
  return state_.observation;
}

StepResult TwoStateMdp::step(std::size_t action) {
  if (!active_) throw StateError("TwoStateMdp: step without an active episode");
  if (action > 1) throw std::out_of_range("TwoStateMdp: action");
  StepResult r;
  r.reward = reward(current_, action);
  current_ = next(current_, action);
  r.next_obs = observation(current_);
  state_.observation = r.next_obs;
  ++state_.step_count;
  if (state_.step_count >= task_.max_episode_length) {
    r.done = true;
    r.done_cause = DoneCause::TimeLimit;
    active_ = false;
  }
  return r;
}

QTable two_state_q_star(double gamma, double tol) {
  QTable q{};
  for (int it = 0; it < 100000; ++it) {
    QTable nq{};
    double delta = 0.0;
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t a = 0; a < 2; ++a) {
        const std::size_t n = TwoStateMdp::next(s, a);
        nq[s][a] = TwoStateMdp::reward(s, a) + gamma * std::max(q[n][0], q[n][1]);
        delta = std::max(delta, std::abs(nq[s][a] - q[s][a]));
      }
    q = nq;
    if (delta < tol) break;
  }
  return q;
}

}  // namespace seforge::verify

namespace seforge::verify {

AgentConfig two_state_agent_config(AgentKind kind) {
  AgentConfig cfg = default_agent_config(kind);
  cfg.hidden_layers = 1;
  cfg.hidden_size = 16;
  cfg.batch_size = 32;
  cfg.learning_rate = 3e-3;
  cfg.target_update_rate = 0.05;
  cfg.discount = kTwoStateGamma;
  cfg.eps_init = 1.0;
  cfg.eps_min = 1.0;
  cfg.eps_decay = 1.0;
  cfg.initial_episodes = 1;
  cfg.replay_buffer_size = 10000;
  return cfg;
}

TwoStateOutcome train_two_state(AgentKind kind, std::uint64_t seed, std::size_t steps) {
  constexpr std::size_t kEpisodeLength = 20;
  TwoStateMdp env(kEpisodeLength);
  auto agent = make_agent(two_state_agent_config(kind), env.task(), seed);
  TrainOptions opts;
  opts.heuristics = false;
  opts.max_episodes = (steps + kEpisodeLength - 1) / kEpisodeLength;
  Rng rng(derive_seed(seed, {1}));
  const TrainReport report = train_agent(*agent, env, opts, rng);

  TwoStateOutcome out;
  out.env_steps = report.env_steps_used;
  for (std::size_t s = 0; s < 2; ++s) {
    const auto obs = TwoStateMdp::observation(s);
    out.greedy[s] = agent->act(obs, ActMode::Greedy).action;
    if (const auto* ddqn = dynamic_cast<const DdqnAgent*>(agent.get())) {
      const auto q = q_values(ddqn->learner().net, ddqn->learner().head, obs);
      out.q[s] = {q[0], q[1]};
    }
  }
  return out;
}

}  // namespace seforge::verify

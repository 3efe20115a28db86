#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "seforge/agent_config.hpp"
#include "seforge/environment.hpp"
#include "seforge/mlp.hpp"
#include "seforge/optim.hpp"
#include "seforge/replay_buffer.hpp"

namespace seforge {

// --- shared pieces ------------------------------------------------------------

/// Online network and its slowly tracking target copy.
struct QNetworkPair {
  MlpArchitecture arch;
  FlatParams online;
  FlatParams target;

  static QNetworkPair create(const MlpArchitecture& arch, Rng& rng);
};

/// Lowest index wins ties.
std::size_t argmax(std::span<const double> values);

MlpArchitecture agent_trunk(const AgentConfig& cfg, std::size_t input_dim, std::size_t output_dim);

// --- DDQN / Dueling DDQN ------------------------------------------------------

enum class QHead {
  Plain,    // network outputs Q(s, .)
  Dueling,  // network outputs [V(s), A(s, .)]
};

/// Q = V + A - mean(A).
std::vector<double> dueling_aggregate(double value, std::span<const double> advantages);

/// Q-values of the online network for one observation.
std::vector<double> q_values(const QNetworkPair& net, QHead head, std::span<const double> obs);
Matrix q_values_batch(const MlpArchitecture& arch, const FlatParams& params, QHead head, const Matrix& obs,
                      ForwardTrace* trace = nullptr);

/// Epsilon-greedy action on the online network.
std::size_t ddqn_act(const QNetworkPair& net, QHead head, std::span<const double> obs, double eps, Rng& rng);

struct DdqnLearner {
  QNetworkPair net;
  QHead head = QHead::Plain;
  AdamOptimizer optimizer;
  GradientBuffer grad;

  static DdqnLearner create(const AgentConfig& cfg, const TaskSpec& task, Rng& rng);
};

/// One Adam step on the mean squared double-DQN TD error of a sampled batch,
/// followed by a soft target update. Returns the pre-step loss, or nullopt
/// (and does nothing) while the buffer holds fewer than batch_size items.
std::optional<double> ddqn_train_step(DdqnLearner& learner, const ReplayBuffer& buffer, const AgentConfig& cfg,
                                      Rng& rng);

/// Same update for an explicit batch.
double ddqn_train_on_batch(DdqnLearner& learner, std::span<const Transition* const> batch, const AgentConfig& cfg);

// --- discrete TD3 -------------------------------------------------------------

enum class ActMode { Explore, Greedy };

struct ActionChoice {
  std::size_t action = 0;
  std::vector<double> soft_action;
};

/// Gumbel(0, 1) draws, one per entry.
Matrix sample_gumbel(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// softmax((logits + gumbel) / temperature), row-wise.
Matrix gumbel_softmax(const Matrix& logits, const Matrix& gumbel, double temperature);

/// Explore: executed action = argmax of a Gumbel-Softmax sample.
/// Greedy: argmax of the logits, soft action softmax(logits / temperature).
/// Throws std::invalid_argument for temperature <= 0.
ActionChoice td3d_act(const MlpArchitecture& actor_arch, const FlatParams& actor, std::span<const double> obs,
                      double temperature, Rng& rng, ActMode mode);

struct Td3Networks {
  MlpArchitecture actor_arch;
  FlatParams actor;
  FlatParams actor_target;
  /// Temperature is learned in log space.
  double log_temperature = 0.0;
  QNetworkPair critic1;
  QNetworkPair critic2;

  double temperature() const;

  static Td3Networks create(const AgentConfig& cfg, const TaskSpec& task, Rng& rng);
};

struct ActorObjective {
  double loss = 0.0;  // -mean Q1(s, soft_action(s))
  GradientBuffer actor_grad;
  double log_temperature_grad = 0.0;
};

/// Actor loss and its gradients for fixed Gumbel noise (one row per state).
ActorObjective td3d_actor_objective(const Td3Networks& nets, const Matrix& states, const Matrix& gumbel);

struct Td3Learner {
  Td3Networks nets;
  AdamOptimizer actor_optimizer;
  AdamOptimizer temperature_optimizer;
  AdamOptimizer critic1_optimizer;
  AdamOptimizer critic2_optimizer;

  static Td3Learner create(const AgentConfig& cfg, const TaskSpec& task, Rng& rng);
};

struct Td3StepResult {
  double critic_loss = 0.0;  // mean of both critics' losses before the step
  std::optional<double> actor_loss;
};

/// Twin-critic update every call; actor, temperature and target updates on
/// every policy_delay-th call (step_index counts calls from 0).
std::optional<Td3StepResult> td3d_train_step(Td3Learner& learner, const ReplayBuffer& buffer, const AgentConfig& cfg,
                                             std::size_t step_index, Rng& rng);

/// Critic target r + gamma * (1 - terminal) * min(Q1', Q2')(s', a~') for each transition.
std::vector<double> td3d_critic_targets(const Td3Networks& nets, std::span<const Transition* const> batch,
                                        const AgentConfig& cfg, const Matrix& gumbel);

// --- agent facade ---------------------------------------------------------------

/// A learner with its own replay buffer and random stream, driven by the training loop.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual AgentKind kind() const = 0;
  const AgentConfig& config() const { return cfg_; }
  const TaskSpec& task() const { return task_; }

  /// Sets per-episode exploration and records the episode index.
  virtual void begin_episode(std::size_t episode_index);
  virtual ActionChoice act(std::span<const double> obs, ActMode mode) = 0;
  /// Uniformly random action (used during the initial data-collection episodes).
  ActionChoice random_action();
  void observe(Transition t) { buffer_.push(std::move(t)); }
  /// nullopt while the buffer is smaller than a batch.
  virtual std::optional<double> train_step() = 0;

  const ReplayBuffer& buffer() const { return buffer_; }
  double epsilon() const { return epsilon_; }
  Rng& rng() { return rng_; }

 protected:
  Agent(const AgentConfig& cfg, const TaskSpec& task, std::uint64_t seed);

  AgentConfig cfg_;
  TaskSpec task_;
  ReplayBuffer buffer_;
  Rng rng_;
  double epsilon_ = 1.0;
};

class DdqnAgent final : public Agent {
 public:
  DdqnAgent(const AgentConfig& cfg, const TaskSpec& task, std::uint64_t seed);

  AgentKind kind() const override { return cfg_.kind; }
  ActionChoice act(std::span<const double> obs, ActMode mode) override;
  std::optional<double> train_step() override;

  const DdqnLearner& learner() const { return learner_; }
  DdqnLearner& learner() { return learner_; }

 private:
  DdqnLearner learner_;
};

class Td3Agent final : public Agent {
 public:
  Td3Agent(const AgentConfig& cfg, const TaskSpec& task, std::uint64_t seed);

  AgentKind kind() const override { return AgentKind::DiscreteTD3; }
  ActionChoice act(std::span<const double> obs, ActMode mode) override;
  std::optional<double> train_step() override;

  const Td3Learner& learner() const { return learner_; }
  Td3Learner& learner() { return learner_; }

 private:
  Td3Learner learner_;
  std::size_t train_calls_ = 0;
};

std::unique_ptr<Agent> make_agent(const AgentConfig& cfg, const TaskSpec& task, std::uint64_t seed);

}  // namespace seforge

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "seforge/agents.hpp"
#include "seforge/error.hpp"

namespace seforge {

QNetworkPair QNetworkPair::create(const MlpArchitecture& arch, Rng& rng) {
  QNetworkPair p{arch, init_params(arch, rng), {}};
  p.target = p.online;
  return p;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ShapeError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

MlpArchitecture agent_trunk(const AgentConfig& cfg, std::size_t input_dim, std::size_t output_dim) {
  MlpArchitecture arch{input_dim, output_dim, std::vector<std::size_t>(cfg.hidden_layers, cfg.hidden_size),
                       cfg.activation};
  arch.validate();
  return arch;
}

std::vector<double> dueling_aggregate(double value, std::span<const double> advantages) {
  if (advantages.empty()) throw ShapeError("dueling_aggregate: no advantages");
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / static_cast<double>(advantages.size());
  std::vector<double> q(advantages.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = value + advantages[i] - mean;
  return q;
}

Matrix q_values_batch(const MlpArchitecture& arch, const FlatParams& params, QHead head, const Matrix& obs,
                      ForwardTrace* trace) {
  Matrix raw = forward_batch(arch, params, obs, trace);
  if (head == QHead::Plain) return raw;
  const Eigen::Index n = raw.cols() - 1;
  Matrix q(raw.rows(), n);
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    const double mean = raw.row(r).tail(n).mean();
    q.row(r) = raw.row(r).tail(n).array() + (raw(r, 0) - mean);
  }
  return q;
}

std::vector<double> q_values(const QNetworkPair& net, QHead head, std::span<const double> obs) {
  const Matrix in = Eigen::Map<const Matrix>(obs.data(), 1, static_cast<Eigen::Index>(obs.size()));
  const Matrix q = q_values_batch(net.arch, net.online, head, in);
  return {q.data(), q.data() + q.size()};
}

std::size_t ddqn_act(const QNetworkPair& net, QHead head, std::span<const double> obs, double eps, Rng& rng) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("epsilon must be in [0, 1]");
  const std::vector<double> q = q_values(net, head, obs);
  if (eps > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < eps) {
      std::uniform_int_distribution<std::size_t> pick(0, q.size() - 1);
      return pick(rng);
    }
  }
  return argmax(q);
}

DdqnLearner DdqnLearner::create(const AgentConfig& cfg, const TaskSpec& task, Rng& rng) {
  const QHead head = cfg.kind == AgentKind::DuelingDDQN ? QHead::Dueling : QHead::Plain;
  const std::size_t out = head == QHead::Dueling ? task.n_actions + 1 : task.n_actions;
  QNetworkPair net = QNetworkPair::create(agent_trunk(cfg, task.obs_dim, out), rng);
  const std::size_t n = net.online.size();
  return DdqnLearner{std::move(net), head, AdamOptimizer(n, AdamOptions{cfg.learning_rate}), GradientBuffer(n)};
}

double ddqn_train_on_batch(DdqnLearner& learner, std::span<const Transition* const> batch, const AgentConfig& cfg) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  if (b == 0) throw StateError("ddqn: empty batch");
  const auto obs_dim = static_cast<Eigen::Index>(batch.front()->state.size());
  Matrix s(b, obs_dim);
  Matrix s_next(b, obs_dim);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Transition& t = *batch[static_cast<std::size_t>(i)];
    s.row(i) = Eigen::Map<const Eigen::RowVectorXd>(t.state.data(), obs_dim);
    s_next.row(i) = Eigen::Map<const Eigen::RowVectorXd>(t.next_state.data(), obs_dim);
  }

  QNetworkPair& net = learner.net;
  // Online net picks a', target net evaluates it.
  const Matrix q_next_online = q_values_batch(net.arch, net.online, learner.head, s_next);
  const Matrix q_next_target = q_values_batch(net.arch, net.target, learner.head, s_next);

  ForwardTrace trace;
  const Matrix raw = forward_batch(net.arch, net.online, s, &trace);
  const Eigen::Index n_actions = learner.head == QHead::Dueling ? raw.cols() - 1 : raw.cols();

  // dLoss/dQ(s, a) for the taken actions, then mapped back through the head.
  Matrix upstream = Matrix::Zero(raw.rows(), raw.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const Transition& t = *batch[static_cast<std::size_t>(i)];
    Eigen::Index a_star = 0;
    q_next_online.row(i).maxCoeff(&a_star);
    for (Eigen::Index a = 0; a < n_actions; ++a) {
      if (q_next_online(i, a) == q_next_online(i, a_star)) {
        a_star = a;
        break;
      }
    }
    const double bootstrap = t.terminal ? 0.0 : cfg.discount * q_next_target(i, a_star);
    const double y = t.reward + bootstrap;
    const auto a = static_cast<Eigen::Index>(t.action);
    double q_sa = 0.0;
    if (learner.head == QHead::Plain) {
      q_sa = raw(i, a);
    } else {
      q_sa = raw(i, 0) + raw(i, 1 + a) - raw.row(i).tail(n_actions).mean();
    }
    const double err = q_sa - y;
    loss += err * err;
    const double g = 2.0 * err / static_cast<double>(b);
    if (learner.head == QHead::Plain) {
      upstream(i, a) = g;
    } else {
      upstream(i, 0) = g;
      for (Eigen::Index j = 0; j < n_actions; ++j) upstream(i, 1 + j) = -g / static_cast<double>(n_actions);
      upstream(i, 1 + a) += g;
    }
  }
  loss /= static_cast<double>(b);
  if (!std::isfinite(loss)) throw NumericalError("ddqn: non-finite TD loss");

  learner.grad.zero();
  backward_batch(net.arch, net.online, trace, upstream, learner.grad);
  learner.optimizer.step(net.online, learner.grad);
  soft_update(net.target, net.online, cfg.target_update_rate);
  return loss;
}

std::optional<double> ddqn_train_step(DdqnLearner& learner, const ReplayBuffer& buffer, const AgentConfig& cfg,
                                      Rng& rng) {
  if (buffer.size() < cfg.batch_size) return std::nullopt;
  const auto batch = buffer.sample(cfg.batch_size, rng);
  return ddqn_train_on_batch(learner, batch, cfg);
}

// --- agent facade ---------------------------------------------------------------

Agent::Agent(const AgentConfig& cfg, const TaskSpec& task, std::uint64_t seed)
    : cfg_(cfg), task_(task), buffer_(cfg.replay_buffer_size), rng_(seed) {
  cfg_.validate();
  if (task.obs_dim == 0 || task.n_actions == 0) throw ConfigError("agent: task has no observations or actions");
}

void Agent::begin_episode(std::size_t episode_index) { epsilon_ = epsilon_schedule(cfg_, episode_index); }

ActionChoice Agent::random_action() {
  std::uniform_int_distribution<std::size_t> pick(0, task_.n_actions - 1);
  return {pick(rng_), {}};
}

DdqnAgent::DdqnAgent(const AgentConfig& cfg, const TaskSpec& task, std::uint64_t seed)
    : Agent(cfg, task, seed), learner_(DdqnLearner::create(cfg_, task, rng_)) {
  if (cfg.kind == AgentKind::DiscreteTD3) throw ConfigError("DdqnAgent cannot run a TD3 config");
}

ActionChoice DdqnAgent::act(std::span<const double> obs, ActMode mode) {
  const double eps = mode == ActMode::Greedy ? 0.0 : epsilon_;
  return {ddqn_act(learner_.net, learner_.head, obs, eps, rng_), {}};
}

std::optional<double> DdqnAgent::train_step() { return ddqn_train_step(learner_, buffer_, cfg_, rng_); }

std::unique_ptr<Agent> make_agent(const AgentConfig& cfg, const TaskSpec& task, std::uint64_t seed) {
  if (cfg.kind == AgentKind::DiscreteTD3) return std::make_unique<Td3Agent>(cfg, task, seed);
  return std::make_unique<DdqnAgent>(cfg, task, seed);
}

}  // namespace seforge

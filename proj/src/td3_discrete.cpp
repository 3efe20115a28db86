#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seforge/agents.hpp"
#include "seforge/error.hpp"

namespace seforge {

namespace {

// Keeps the learned temperature inside a range where softmax stays well conditioned.
constexpr double kMinLogTemperature = -4.605170185988091;  // log(0.01)
constexpr double kMaxLogTemperature = 4.605170185988091;   // log(100)

Matrix softmax_rows(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    out.row(r) = (z.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Matrix states_of(std::span<const Transition* const> batch, bool next) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  const auto d = static_cast<Eigen::Index>(batch.front()->state.size());
  Matrix s(b, d);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& v = next ? batch[static_cast<std::size_t>(i)]->next_state : batch[static_cast<std::size_t>(i)]->state;
    s.row(i) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), d);
  }
  return s;
}

Matrix soft_actions_of(std::span<const Transition* const> batch, std::size_t n_actions) {
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(n_actions));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    if (t.soft_action.empty()) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t.action)) = 1.0;
    } else {
      if (t.soft_action.size() != n_actions) throw ShapeError("td3: stored soft action has wrong length");
      for (std::size_t j = 0; j < n_actions; ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.soft_action[j];
    }
  }
  return a;
}

double critic_regression_step(QNetworkPair& critic, AdamOptimizer& opt, const Matrix& inputs,
                              std::span<const double> targets) {
  ForwardTrace trace;
  const Matrix q = forward_batch(critic.arch, critic.online, inputs, &trace);
  const auto b = q.rows();
  Matrix upstream(b, 1);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const double err = q(i, 0) - targets[static_cast<std::size_t>(i)];
    loss += err * err;
    upstream(i, 0) = 2.0 * err / static_cast<double>(b);
  }
  loss /= static_cast<double>(b);
  if (!std::isfinite(loss)) throw NumericalError("td3: non-finite critic loss");
  GradientBuffer grad(critic.online.size());
  backward_batch(critic.arch, critic.online, trace, upstream, grad);
  opt.step(critic.online, grad);
  return loss;
}

}  // namespace

Matrix sample_gumbel(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix g(rows, cols);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double x = std::clamp(u(rng), 1e-300, 1.0 - 1e-16);
    g.data()[i] = -std::log(-std::log(x));
  }
  return g;
}

Matrix gumbel_softmax(const Matrix& logits, const Matrix& gumbel, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("gumbel_softmax: temperature must be > 0");
  return softmax_rows((logits + gumbel) / temperature);
}

ActionChoice td3d_act(const MlpArchitecture& actor_arch, const FlatParams& actor, std::span<const double> obs,
                      double temperature, Rng& rng, ActMode mode) {
  if (!(temperature > 0.0)) throw std::invalid_argument("td3d_act: temperature must be > 0");
  const Matrix in = Eigen::Map<const Matrix>(obs.data(), 1, static_cast<Eigen::Index>(obs.size()));
  const Matrix logits = forward_batch(actor_arch, actor, in);
  ActionChoice choice;
  if (mode == ActMode::Explore) {
    const Matrix y = gumbel_softmax(logits, sample_gumbel(1, logits.cols(), rng), temperature);
    choice.soft_action.assign(y.data(), y.data() + y.size());
    choice.action = argmax(choice.soft_action);
  } else {
    const Matrix y = softmax_rows(logits / temperature);
    choice.soft_action.assign(y.data(), y.data() + y.size());
    choice.action = argmax(std::span<const double>(logits.data(), static_cast<std::size_t>(logits.size())));
  }
  return choice;
}

double Td3Networks::temperature() const { return std::exp(log_temperature); }

Td3Networks Td3Networks::create(const AgentConfig& cfg, const TaskSpec& task, Rng& rng) {
  Td3Networks n;
  n.actor_arch = agent_trunk(cfg, task.obs_dim, task.n_actions);
  n.actor = init_params(n.actor_arch, rng);
  n.actor_target = n.actor;
  n.log_temperature = std::log(cfg.gumbel_start_temperature);
  const MlpArchitecture critic_arch = agent_trunk(cfg, task.obs_dim + task.n_actions, 1);
  n.critic1 = QNetworkPair::create(critic_arch, rng);
  n.critic2 = QNetworkPair::create(critic_arch, rng);
  return n;
}

Td3Learner Td3Learner::create(const AgentConfig& cfg, const TaskSpec& task, Rng& rng) {
  Td3Networks nets = Td3Networks::create(cfg, task, rng);
  const AdamOptions opts{cfg.learning_rate};
  const std::size_t na = nets.actor.size();
  const std::size_t nc = nets.critic1.online.size();
  return Td3Learner{std::move(nets), AdamOptimizer(na, opts), AdamOptimizer(1, opts), AdamOptimizer(nc, opts),
                    AdamOptimizer(nc, opts)};
}

std::vector<double> td3d_critic_targets(const Td3Networks& nets, std::span<const Transition* const> batch,
                                        const AgentConfig& cfg, const Matrix& gumbel) {
  const Matrix s_next = states_of(batch, true);
  const Matrix logits = forward_batch(nets.actor_arch, nets.actor_target, s_next);
  const Matrix a_next = gumbel_softmax(logits, gumbel, nets.temperature());
  const Matrix in = concat_cols(s_next, a_next);
  const Matrix q1 = forward_batch(nets.critic1.arch, nets.critic1.target, in);
  const Matrix q2 = forward_batch(nets.critic2.arch, nets.critic2.target, in);
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double bootstrap = batch[i]->terminal ? 0.0 : cfg.discount * std::min(q1(r, 0), q2(r, 0));
    y[i] = batch[i]->reward + bootstrap;
  }
  return y;
}

ActorObjective td3d_actor_objective(const Td3Networks& nets, const Matrix& states, const Matrix& gumbel) {
  const double temp = nets.temperature();
  ForwardTrace actor_trace;
  const Matrix logits = forward_batch(nets.actor_arch, nets.actor, states, &actor_trace);
  const Matrix z = (logits + gumbel) / temp;
  const Matrix y = softmax_rows(z);

  ForwardTrace critic_trace;
  const Matrix q = forward_batch(nets.critic1.arch, nets.critic1.online, concat_cols(states, y), &critic_trace);
  const auto b = static_cast<double>(states.rows());

  ActorObjective obj;
  obj.loss = -q.mean();

  GradientBuffer critic_scratch(nets.critic1.online.size());
  const Matrix upstream = Matrix::Constant(q.rows(), 1, -1.0 / b);
  const Matrix d_in = backward_batch(nets.critic1.arch, nets.critic1.online, critic_trace, upstream, critic_scratch);
  const Matrix g = d_in.rightCols(y.cols());

  // softmax Jacobian: dz_j = y_j (g_j - sum_k y_k g_k)
  Matrix dz(y.rows(), y.cols());
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double dot = y.row(r).dot(g.row(r));
    dz.row(r) = y.row(r).array() * (g.row(r).array() - dot);
  }
  // z = (logits + gumbel) / exp(log_t): dz/dlogits = 1/t, dz/dlog_t = -z
  obj.log_temperature_grad = -(dz.array() * z.array()).sum();
  obj.actor_grad = GradientBuffer(nets.actor.size());
  backward_batch(nets.actor_arch, nets.actor, actor_trace, dz / temp, obj.actor_grad);
  return obj;
}

std::optional<Td3StepResult> td3d_train_step(Td3Learner& learner, const ReplayBuffer& buffer, const AgentConfig& cfg,
                                             std::size_t step_index, Rng& rng) {
  if (buffer.size() < cfg.batch_size) return std::nullopt;
  Td3Networks& nets = learner.nets;
  const auto batch = buffer.sample(cfg.batch_size, rng);
  const auto n_actions = static_cast<Eigen::Index>(nets.actor_arch.output_dim);
  const auto b = static_cast<Eigen::Index>(batch.size());

  const std::vector<double> y = td3d_critic_targets(nets, batch, cfg, sample_gumbel(b, n_actions, rng));
  const Matrix s = states_of(batch, false);
  const Matrix critic_in = concat_cols(s, soft_actions_of(batch, static_cast<std::size_t>(n_actions)));

  Td3StepResult result;
  result.critic_loss = 0.5 * (critic_regression_step(nets.critic1, learner.critic1_optimizer, critic_in, y) +
                              critic_regression_step(nets.critic2, learner.critic2_optimizer, critic_in, y));

  if ((step_index + 1) % cfg.policy_delay == 0) {
    const ActorObjective obj = td3d_actor_objective(nets, s, sample_gumbel(b, n_actions, rng));
    learner.actor_optimizer.step(nets.actor, obj.actor_grad);
    learner.temperature_optimizer.step(nets.log_temperature, obj.log_temperature_grad);
    nets.log_temperature = std::clamp(nets.log_temperature, kMinLogTemperature, kMaxLogTemperature);
    result.actor_loss = obj.loss;
    soft_update(nets.actor_target, nets.actor, cfg.target_update_rate);
    soft_update(nets.critic1.target, nets.critic1.online, cfg.target_update_rate);
    soft_update(nets.critic2.target, nets.critic2.online, cfg.target_update_rate);
  }
  return result;
}

Td3Agent::Td3Agent(const AgentConfig& cfg, const TaskSpec& task, std::uint64_t seed)
    : Agent(cfg, task, seed), learner_(Td3Learner::create(cfg_, task, rng_)) {
  if (cfg.kind != AgentKind::DiscreteTD3) throw ConfigError("Td3Agent needs a TD3 config");
}

ActionChoice Td3Agent::act(std::span<const double> obs, ActMode mode) {
  return td3d_act(learner_.nets.actor_arch, learner_.nets.actor, obs, learner_.nets.temperature(), rng_, mode);
}

std::optional<double> Td3Agent::train_step() {
  auto r = td3d_train_step(learner_, buffer_, cfg_, train_calls_, rng_);
  if (!r) return std::nullopt;
  ++train_calls_;
  return r->critic_loss;
}

}  // namespace seforge

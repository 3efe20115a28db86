#include "seforge/environment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "seforge/error.hpp"

namespace seforge {

TaskSpec cartpole_task() { return {TaskKind::CartPole, "CartPole-v0", 4, 2, 200, 195.0}; }

TaskSpec acrobot_task() { return {TaskKind::Acrobot, "Acrobot-v1", 6, 3, 500, -100.0}; }

TaskSpec task_by_name(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "cartpole" || s == "cartpole-v0") return cartpole_task();
  if (s == "acrobot" || s == "acrobot-v1") return acrobot_task();
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

std::string_view to_string(DoneCause c) {
  switch (c) {
    case DoneCause::None:
      return "none";
    case DoneCause::Terminal:
      return "terminal";
    case DoneCause::TimeLimit:
      return "time_limit";
  }
  return "?";
}

namespace {

void check_action(std::size_t action, std::size_t n) {
  if (action >= n) {
    throw std::out_of_range("action " + std::to_string(action) + " outside [0, " + std::to_string(n) + ")");
  }
}

}  // namespace

// --- CartPole ---------------------------------------------------------------

namespace cartpole {

State dynamics(const State& s, std::size_t action) {
  const auto [x, x_dot, theta, theta_dot] = s;
  const double force = action == 1 ? kForceMag : -kForceMag;
  const double costheta = std::cos(theta);
  const double sintheta = std::sin(theta);
  const double temp = (force + kPoleMassLength * (theta_dot * theta_dot) * sintheta) / kTotalMass;
  const double thetaacc =
      (kGravity * sintheta - costheta * temp) / (kHalfLength * (4.0 / 3.0 - kMassPole * (costheta * costheta) / kTotalMass));
  const double xacc = temp - kPoleMassLength * thetaacc * costheta / kTotalMass;
  return {x + kTau * x_dot, x_dot + kTau * xacc, theta + kTau * theta_dot, theta_dot + kTau * thetaacc};
}

bool is_terminal(const State& s) {
  return s[0] < -kXThreshold || s[0] > kXThreshold || s[2] < -kThetaThreshold || s[2] > kThetaThreshold;
}

}  // namespace cartpole

StepResult step_cartpole(const cartpole::State& s, std::size_t action) {
  check_action(action, 2);
  const auto next = cartpole::dynamics(s, action);
  StepResult r;
  r.next_obs.assign(next.begin(), next.end());
  r.reward = 1.0;
  r.done = cartpole::is_terminal(next);
  r.done_cause = r.done ? DoneCause::Terminal : DoneCause::None;
  return r;
}

CartPoleEnv::CartPoleEnv() : task_(cartpole_task()) {}

std::vector<double> CartPoleEnv::reset(Rng& rng) {
  std::uniform_real_distribution<double> dist(-cartpole::kResetBound, cartpole::kResetBound);
  cartpole::State s{};
  for (double& v : s) v = dist(rng);
  reset_to(s);
  return state_.observation;
}

void CartPoleEnv::reset_to(const cartpole::State& s) {
  physical_ = s;
  state_.observation.assign(s.begin(), s.end());
  state_.step_count = 0;
  active_ = true;
}

StepResult CartPoleEnv::step(std::size_t action) {
  if (!active_) throw StateError("cartpole: step called on a finished or unstarted episode");
  StepResult r = step_cartpole(physical_, action);
  std::copy(r.next_obs.begin(), r.next_obs.end(), physical_.begin());
  state_.observation = r.next_obs;
  ++state_.step_count;
  if (!r.done && state_.step_count >= task_.max_episode_length) {
    r.done = true;
    r.done_cause = DoneCause::TimeLimit;
  }
  active_ = !r.done;
  return r;
}

// --- Acrobot ----------------------------------------------------------------

namespace acrobot {

namespace {

using Augmented = std::array<double, 5>;

// The reference dynamics square through libm pow, which is not always the
// correctly rounded x * x. The volatile exponent stops the compiler from
// folding pow(x, 2) into a multiply.
double pow2(double x) {
  volatile double two = 2.0;
  return std::pow(x, two);
}

Augmented derivatives(const Augmented& sa) {
  constexpr double m1 = kLinkMass1;
  constexpr double m2 = kLinkMass2;
  constexpr double l1 = kLinkLength1;
  constexpr double lc1 = kLinkComPos1;
  constexpr double lc2 = kLinkComPos2;
  constexpr double i1 = kLinkMoi;
  constexpr double i2 = kLinkMoi;
  constexpr double g = kGravity;
  const double a = sa[4];
  const double theta1 = sa[0];
  const double theta2 = sa[1];
  const double dtheta1 = sa[2];
  const double dtheta2 = sa[3];
  const double d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2 * l1 * lc2 * std::cos(theta2)) + i1 + i2;
  const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
  const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - kPi / 2.0);
  const double phi1 = -m2 * l1 * lc2 * pow2(dtheta2) * std::sin(theta2) -
                      2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                      (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - kPi / 2) + phi2;
  const double ddtheta2 = (a + d2 / d1 * phi1 - m2 * l1 * lc2 * pow2(dtheta1) * std::sin(theta2) - phi2) /
                          (m2 * lc2 * lc2 + i2 - pow2(d2) / d1);
  const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
  return {dtheta1, dtheta2, ddtheta1, ddtheta2, 0.0};
}

Augmented axpy(const Augmented& y, double h, const Augmented& k) {
  Augmented out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = y[i] + h * k[i];
  return out;
}

double wrap(double x, double lo, double hi) {
  const double diff = hi - lo;
  while (x > hi) x -= diff;
  while (x < lo) x += diff;
  return x;
}

}  // namespace

State dynamics(const State& s, std::size_t action) {
  const Augmented y0{s[0], s[1], s[2], s[3], kTorques[action]};
  const double dt = kDt;
  const double dt2 = dt / 2.0;
  const Augmented k1 = derivatives(y0);
  const Augmented k2 = derivatives(axpy(y0, dt2, k1));
  const Augmented k3 = derivatives(axpy(y0, dt2, k2));
  const Augmented k4 = derivatives(axpy(y0, dt, k3));
  State ns{};
  for (std::size_t i = 0; i < ns.size(); ++i) ns[i] = y0[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  ns[0] = wrap(ns[0], -kPi, kPi);
  ns[1] = wrap(ns[1], -kPi, kPi);
  ns[2] = std::clamp(ns[2], -kMaxVel1, kMaxVel1);
  ns[3] = std::clamp(ns[3], -kMaxVel2, kMaxVel2);
  return ns;
}

bool is_terminal(const State& s) { return -std::cos(s[0]) - std::cos(s[1] + s[0]) > 1.0; }

std::vector<double> observe(const State& s) {
  return {std::cos(s[0]), std::sin(s[0]), std::cos(s[1]), std::sin(s[1]), s[2], s[3]};
}

}  // namespace acrobot

StepResult step_acrobot(const acrobot::State& s, std::size_t action) {
  check_action(action, 3);
  const auto next = acrobot::dynamics(s, action);
  StepResult r;
  r.next_obs = acrobot::observe(next);
  r.done = acrobot::is_terminal(next);
  r.reward = r.done ? 0.0 : -1.0;
  r.done_cause = r.done ? DoneCause::Terminal : DoneCause::None;
  return r;
}

AcrobotEnv::AcrobotEnv() : task_(acrobot_task()) {}

std::vector<double> AcrobotEnv::reset(Rng& rng) {
  std::uniform_real_distribution<double> dist(-acrobot::kResetBound, acrobot::kResetBound);
  acrobot::State s{};
  for (double& v : s) v = dist(rng);
  reset_to(s);
  return state_.observation;
}

void AcrobotEnv::reset_to(const acrobot::State& s) {
  physical_ = s;
  state_.observation = acrobot::observe(s);
  state_.step_count = 0;
  active_ = true;
}

StepResult AcrobotEnv::step(std::size_t action) {
  if (!active_) throw StateError("acrobot: step called on a finished or unstarted episode");
  check_action(action, 3);
  physical_ = acrobot::dynamics(physical_, action);
  StepResult r;
  r.next_obs = acrobot::observe(physical_);
  r.done = acrobot::is_terminal(physical_);
  r.reward = r.done ? 0.0 : -1.0;
  r.done_cause = r.done ? DoneCause::Terminal : DoneCause::None;
  state_.observation = r.next_obs;
  ++state_.step_count;
  if (!r.done && state_.step_count >= task_.max_episode_length) {
    r.done = true;
    r.done_cause = DoneCause::TimeLimit;
  }
  active_ = !r.done;
  return r;
}

// ---------------------------------------------------------------------------

std::vector<double> sample_initial_observation(const TaskSpec& task, Rng& rng) {
  switch (task.kind) {
    case TaskKind::CartPole:
      return CartPoleEnv().reset(rng);
    case TaskKind::Acrobot:
      return AcrobotEnv().reset(rng);
    case TaskKind::Custom:
      break;
  }
  throw ConfigError("no reset distribution known for task '" + task.name + "'");
}

std::unique_ptr<Environment> make_real_env(const TaskSpec& task) {
  switch (task.kind) {
    case TaskKind::CartPole:
      return std::make_unique<CartPoleEnv>();
    case TaskKind::Acrobot:
      return std::make_unique<AcrobotEnv>();
    case TaskKind::Custom:
      break;
  }
  throw ConfigError("no real environment for task '" + task.name + "'");
}

double cumulative_reward(std::span<const StepResult> episode) {
  double total = 0.0;
  for (const auto& r : episode) total += r.reward;
  return total;
}

}  // namespace seforge

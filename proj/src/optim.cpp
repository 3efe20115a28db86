#include "seforge/optim.hpp"

#include <cmath>

#include "seforge/error.hpp"

namespace seforge {

AdamOptimizer::AdamOptimizer(std::size_t n, AdamOptions options) : options_(options), m_(n, 0.0), v_(n, 0.0) {}

void AdamOptimizer::step(FlatParams& params, const GradientBuffer& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw ShapeError("adam: optimizer state does not match parameter count");
  }
  if (!grad.all_finite()) throw NumericalError("adam: non-finite gradient");
  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = options_.learning_rate * std::sqrt(c2) / c1;
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const double g = grad.values[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    params[i] -= lr * m_[i] / (std::sqrt(v_[i]) + options_.epsilon * std::sqrt(c2));
  }
}

void AdamOptimizer::step(double& param, double grad) {
  FlatParams p(std::vector<double>{param});
  GradientBuffer g(1);
  g.values[0] = grad;
  step(p, g);
  param = p[0];
}

}  // namespace seforge

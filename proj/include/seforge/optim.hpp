#pragma once

#include <cstddef>
#include <vector>

#include "seforge/mlp.hpp"

namespace seforge {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. One instance per parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n, AdamOptions options);

  /// Descends along `grad`. Throws NumericalError if the gradient is not finite.
  void step(FlatParams& params, const GradientBuffer& grad);
  /// Single scalar variant, used for the learned Gumbel temperature.
  void step(double& param, double grad);

  std::size_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace seforge

#pragma once

// Dense feed-forward networks over a flat parameter vector.
//
// Parameter layout, per layer l = 0..L-1 (L = hidden layers + 1):
//   W_l  fan_out x fan_in, row-major
//   b_l  fan_out
// followed, for PReLU networks only, by one learned slope per hidden layer.
// The output layer is always linear.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "seforge/rng.hpp"

namespace seforge {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { Tanh, ReLU, LeakyReLU, PReLU };

inline constexpr double kLeakyReluSlope = 0.01;
inline constexpr double kPreluInitialSlope = 0.25;

std::string_view to_string(Activation a);
/// Accepts "tanh", "relu", "lrelu"/"leaky_relu", "prelu" (case-insensitive).
Activation parse_activation(std::string_view name);

struct MlpArchitecture {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  std::vector<std::size_t> hidden_sizes{1};
  Activation activation = Activation::ReLU;

  std::size_t layer_count() const { return hidden_sizes.size() + 1; }
  std::size_t fan_in(std::size_t layer) const;
  std::size_t fan_out(std::size_t layer) const;
  std::size_t parameter_count() const;

  /// Throws ShapeError unless all dims >= 1 and 1..3 hidden layers.
  void validate() const;

  bool operator==(const MlpArchitecture&) const = default;
};

/// Offsets of each layer's weights/biases and of the PReLU slopes.
class ParamLayout {
 public:
  struct Layer {
    std::size_t weight_offset;
    std::size_t bias_offset;
    std::size_t fan_in;
    std::size_t fan_out;
  };

  explicit ParamLayout(const MlpArchitecture& arch);

  const Layer& layer(std::size_t l) const { return layers_[l]; }
  std::size_t layer_count() const { return layers_.size(); }
  /// Only meaningful for PReLU architectures.
  std::size_t slope_offset(std::size_t hidden_layer) const { return slope_offset_ + hidden_layer; }
  std::size_t size() const { return size_; }

 private:
  std::vector<Layer> layers_;
  std::size_t slope_offset_ = 0;
  std::size_t size_ = 0;
};

/// All weights, biases and PReLU slopes of one network.
struct FlatParams {
  std::vector<double> values;

  FlatParams() = default;
  explicit FlatParams(std::size_t n, double fill = 0.0) : values(n, fill) {}
  explicit FlatParams(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::span<double> span() { return values; }
  std::span<const double> span() const { return values; }
  bool all_finite() const;

  bool operator==(const FlatParams&) const = default;
};

/// Accumulated dLoss/dParams; same layout as FlatParams.
struct GradientBuffer {
  std::vector<double> values;

  GradientBuffer() = default;
  explicit GradientBuffer(std::size_t n) : values(n, 0.0) {}

  std::size_t size() const { return values.size(); }
  void zero();
  bool all_finite() const;
};

/// Intermediate values of a forward pass, needed by backward.
class ForwardTrace {
 public:
  bool empty() const { return layer_inputs_.empty(); }
  void clear();
  std::size_t batch_size() const { return empty() ? 0 : static_cast<std::size_t>(layer_inputs_.front().rows()); }

 private:
  friend Matrix forward_batch(const MlpArchitecture&, const FlatParams&, const Matrix&, ForwardTrace*);
  friend Matrix backward_batch(const MlpArchitecture&, const FlatParams&, const ForwardTrace&,
                               const Matrix&, GradientBuffer&);

  std::vector<Matrix> layer_inputs_;    // input to layer l
  std::vector<Matrix> preactivations_;  // pre-activation of hidden layer l
  std::size_t params_size_ = 0;
};

/// Random initialization: weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// PReLU slopes at kPreluInitialSlope.
FlatParams init_params(const MlpArchitecture& arch, Rng& rng);

/// Forward pass of a batch (one row per sample). Records a trace when given one.
Matrix forward_batch(const MlpArchitecture& arch, const FlatParams& params, const Matrix& inputs,
                     ForwardTrace* trace = nullptr);

std::vector<double> forward(const MlpArchitecture& arch, const FlatParams& params,
                            std::span<const double> input);

/// Accumulates d(sum_ij upstream_ij * output_ij)/dparams into `grad` and
/// returns the gradient w.r.t. the inputs of the traced batch.
Matrix backward_batch(const MlpArchitecture& arch, const FlatParams& params, const ForwardTrace& trace,
                      const Matrix& upstream, GradientBuffer& grad);

struct BackwardResult {
  GradientBuffer params;
  std::vector<double> input;
};

BackwardResult backward(const MlpArchitecture& arch, const FlatParams& params, const ForwardTrace& trace,
                        std::span<const double> upstream);

/// params + sigma * noise, element-wise.
FlatParams perturb(const FlatParams& params, const FlatParams& noise, double sigma);

/// target <- (1 - tau) * target + tau * online
void soft_update(FlatParams& target, const FlatParams& online, double tau);

Matrix rows_to_matrix(std::span<const std::vector<double>> rows);

}  // namespace seforge

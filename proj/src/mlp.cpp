#include "seforge/mlp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "seforge/error.hpp"

namespace seforge {

namespace {

using ConstRowMap = Eigen::Map<const Matrix>;
using RowMap = Eigen::Map<Matrix>;

std::string layer_name(std::size_t l, std::size_t layer_count) {
  if (l + 1 == layer_count) return "output layer";
  return "hidden layer " + std::to_string(l);
}

void check_params(const MlpArchitecture& arch, std::size_t n) {
  if (n != arch.parameter_count()) {
    throw ShapeError("parameter vector has " + std::to_string(n) + " entries, architecture needs " +
                     std::to_string(arch.parameter_count()));
  }
}

double slope_for(const MlpArchitecture& arch, const ParamLayout& layout, const FlatParams& params,
                 std::size_t hidden) {
  switch (arch.activation) {
    case Activation::LeakyReLU:
      return kLeakyReluSlope;
    case Activation::PReLU:
      return params[layout.slope_offset(hidden)];
    default:
      return 0.0;
  }
}

void activate(const MlpArchitecture& arch, double slope, Matrix& z) {
  switch (arch.activation) {
    case Activation::Tanh: {
      // exp-based form vectorizes; scalar libm tanh dominated training time.
      // Beyond |z| = 20 tanh rounds to +-1; the clamp keeps exp out of the denormals.
      const Matrix e = (-2.0 * z.array().abs().min(20.0)).exp().matrix();
      z = ((1.0 - e.array()) / (1.0 + e.array()) * z.array().sign()).matrix();
      break;
    }
    case Activation::ReLU:
      z = z.cwiseMax(0.0);
      break;
    case Activation::LeakyReLU:
    case Activation::PReLU:
      z = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
      break;
  }
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh:
      return "tanh";
    case Activation::ReLU:
      return "relu";
    case Activation::LeakyReLU:
      return "lrelu";
    case Activation::PReLU:
      return "prelu";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::ReLU;
  if (s == "lrelu" || s == "leaky_relu" || s == "leakyrelu") return Activation::LeakyReLU;
  if (s == "prelu") return Activation::PReLU;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::size_t MlpArchitecture::fan_in(std::size_t layer) const {
  return layer == 0 ? input_dim : hidden_sizes[layer - 1];
}

std::size_t MlpArchitecture::fan_out(std::size_t layer) const {
  return layer == hidden_sizes.size() ? output_dim : hidden_sizes[layer];
}

std::size_t MlpArchitecture::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < layer_count(); ++l) n += (fan_in(l) + 1) * fan_out(l);
  if (activation == Activation::PReLU) n += hidden_sizes.size();
  return n;
}

void MlpArchitecture::validate() const {
  if (input_dim == 0 || output_dim == 0) throw ShapeError("input and output dims must be >= 1");
  if (hidden_sizes.empty() || hidden_sizes.size() > 3) {
    throw ShapeError("between 1 and 3 hidden layers required, got " + std::to_string(hidden_sizes.size()));
  }
  for (std::size_t h : hidden_sizes) {
    if (h == 0) throw ShapeError("hidden layer sizes must be >= 1");
  }
}

ParamLayout::ParamLayout(const MlpArchitecture& arch) {
  std::size_t offset = 0;
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    Layer layer{offset, offset + arch.fan_in(l) * arch.fan_out(l), arch.fan_in(l), arch.fan_out(l)};
    offset = layer.bias_offset + layer.fan_out;
    layers_.push_back(layer);
  }
  slope_offset_ = offset;
  if (arch.activation == Activation::PReLU) offset += arch.hidden_sizes.size();
  size_ = offset;
}

bool FlatParams::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void GradientBuffer::zero() { std::fill(values.begin(), values.end(), 0.0); }

bool GradientBuffer::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void ForwardTrace::clear() {
  layer_inputs_.clear();
  preactivations_.clear();
  params_size_ = 0;
}

FlatParams init_params(const MlpArchitecture& arch, Rng& rng) {
  arch.validate();
  const ParamLayout layout(arch);
  FlatParams params(layout.size());
  for (std::size_t l = 0; l < layout.layer_count(); ++l) {
    const auto& layer = layout.layer(l);
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = layer.weight_offset; i < layer.bias_offset + layer.fan_out; ++i) params[i] = dist(rng);
  }
  if (arch.activation == Activation::PReLU) {
    for (std::size_t h = 0; h < arch.hidden_sizes.size(); ++h) params[layout.slope_offset(h)] = kPreluInitialSlope;
  }
  return params;
}

Matrix forward_batch(const MlpArchitecture& arch, const FlatParams& params, const Matrix& inputs,
                     ForwardTrace* trace) {
  check_params(arch, params.size());
  if (static_cast<std::size_t>(inputs.cols()) != arch.input_dim) {
    throw ShapeError(layer_name(0, arch.layer_count()) + ": expected input width " +
                     std::to_string(arch.input_dim) + ", got " + std::to_string(inputs.cols()));
  }
  const ParamLayout layout(arch);
  if (trace) {
    trace->clear();
    trace->params_size_ = params.size();
  }

  Matrix x = inputs;
  for (std::size_t l = 0; l < layout.layer_count(); ++l) {
    const auto& layer = layout.layer(l);
    const ConstRowMap w(params.values.data() + layer.weight_offset, static_cast<Eigen::Index>(layer.fan_out),
                        static_cast<Eigen::Index>(layer.fan_in));
    const Eigen::Map<const Eigen::RowVectorXd> b(params.values.data() + layer.bias_offset,
                                                  static_cast<Eigen::Index>(layer.fan_out));
    Matrix z = x * w.transpose();
    z.rowwise() += b;
    if (trace) trace->layer_inputs_.push_back(std::move(x));
    if (l + 1 < layout.layer_count()) {
      if (trace) trace->preactivations_.push_back(z);
      activate(arch, slope_for(arch, layout, params, l), z);
    }
    x = std::move(z);
  }
  return x;
}

std::vector<double> forward(const MlpArchitecture& arch, const FlatParams& params, std::span<const double> input) {
  if (input.size() != arch.input_dim) {
    throw ShapeError(layer_name(0, arch.layer_count()) + ": expected input length " +
                     std::to_string(arch.input_dim) + ", got " + std::to_string(input.size()));
  }
  const Matrix in = Eigen::Map<const Matrix>(input.data(), 1, static_cast<Eigen::Index>(input.size()));
  const Matrix out = forward_batch(arch, params, in);
  return {out.data(), out.data() + out.size()};
}

Matrix backward_batch(const MlpArchitecture& arch, const FlatParams& params, const ForwardTrace& trace,
                      const Matrix& upstream, GradientBuffer& grad) {
  if (trace.empty()) throw StateError("backward called without a recorded forward pass");
  check_params(arch, params.size());
  if (trace.params_size_ != params.size()) throw StateError("forward trace belongs to a different network");
  if (grad.size() != params.size()) throw ShapeError("gradient buffer does not match parameter count");
  if (static_cast<std::size_t>(upstream.cols()) != arch.output_dim ||
      static_cast<std::size_t>(upstream.rows()) != trace.batch_size()) {
    throw ShapeError(layer_name(arch.layer_count() - 1, arch.layer_count()) + ": upstream gradient is " +
                     std::to_string(upstream.rows()) + "x" + std::to_string(upstream.cols()) + ", expected " +
                     std::to_string(trace.batch_size()) + "x" + std::to_string(arch.output_dim));
  }
  const ParamLayout layout(arch);

  Matrix delta = upstream;  // d/d(pre-activation) of the current layer
  for (std::size_t l = layout.layer_count(); l-- > 0;) {
    const auto& layer = layout.layer(l);
    const auto fan_out = static_cast<Eigen::Index>(layer.fan_out);
    const auto fan_in = static_cast<Eigen::Index>(layer.fan_in);
    const ConstRowMap w(params.values.data() + layer.weight_offset, fan_out, fan_in);
    RowMap gw(grad.values.data() + layer.weight_offset, fan_out, fan_in);
    Eigen::Map<Eigen::RowVectorXd> gb(grad.values.data() + layer.bias_offset, fan_out);

    const Matrix& input = trace.layer_inputs_[l];
    gw.noalias() += delta.transpose() * input;
    gb += delta.colwise().sum();
    Matrix d_input = delta * w;

    if (l == 0) return d_input;

    // Through the activation of hidden layer l-1.
    const Matrix& z = trace.preactivations_[l - 1];
    switch (arch.activation) {
      case Activation::Tanh:
        delta = d_input.array() * (1.0 - input.array().square());
        break;
      case Activation::ReLU:
        delta = d_input.array() * (z.array() > 0.0).cast<double>();
        break;
      case Activation::LeakyReLU:
        delta = d_input.array() * (z.array() > 0.0).select(1.0, Matrix::Constant(z.rows(), z.cols(), kLeakyReluSlope)).array();
        break;
      case Activation::PReLU: {
        const std::size_t slope_idx = layout.slope_offset(l - 1);
        const double slope = params[slope_idx];
        const auto negative = (z.array() > 0.0).select(Matrix::Zero(z.rows(), z.cols()), z);
        grad.values[slope_idx] += (d_input.array() * negative.array()).sum();
        delta = d_input.array() * (z.array() > 0.0).select(1.0, Matrix::Constant(z.rows(), z.cols(), slope)).array();
        break;
      }
    }
  }
  return {};
}

BackwardResult backward(const MlpArchitecture& arch, const FlatParams& params, const ForwardTrace& trace,
                        std::span<const double> upstream) {
  if (trace.batch_size() > 1) throw StateError("single-sample backward on a batched trace");
  const Matrix up = Eigen::Map<const Matrix>(upstream.data(), 1, static_cast<Eigen::Index>(upstream.size()));
  BackwardResult result{GradientBuffer(params.size()), {}};
  const Matrix d_input = backward_batch(arch, params, trace, up, result.params);
  result.input.assign(d_input.data(), d_input.data() + d_input.size());
  return result;
}

FlatParams perturb(const FlatParams& params, const FlatParams& noise, double sigma) {
  if (params.size() != noise.size()) {
    throw ShapeError("perturb: params have " + std::to_string(params.size()) + " entries, noise has " +
                     std::to_string(noise.size()));
  }
  FlatParams out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] + sigma * noise[i];
  return out;
}

void soft_update(FlatParams& target, const FlatParams& online, double tau) {
  if (target.size() != online.size()) throw ShapeError("soft_update: parameter vectors differ in length");
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = (1.0 - tau) * target[i] + tau * online[i];
}

Matrix rows_to_matrix(std::span<const std::vector<double>> rows) {
  if (rows.empty()) return {};
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) throw ShapeError("rows_to_matrix: ragged rows");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

}  // namespace seforge

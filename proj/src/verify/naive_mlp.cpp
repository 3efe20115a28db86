#include <algorithm>
#include <cmath>

#include "seforge/error.hpp"
#include "seforge/verify.hpp"

namespace seforge::verify {

namespace {

double activate(Activation act, double z, double slope) {
  switch (act) {
    case Activation::Tanh: return std::tanh(z);
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::LeakyReLU: return z > 0.0 ? z : 0.01 * z;
    case Activation::PReLU: return z > 0.0 ? z : slope * z;
  }
  return z;
}

}  // namespace

std::vector<double> naive_forward(const MlpArchitecture& arch, const std::vector<double>& params,
                                  const std::vector<double>& input) {
  std::vector<std::size_t> dims;
  dims.push_back(arch.input_dim);
  for (std::size_t h : arch.hidden_sizes) dims.push_back(h);
  dims.push_back(arch.output_dim);

  std::size_t expected = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) expected += dims[l] * dims[l + 1] + dims[l + 1];
  const std::size_t n_hidden = arch.hidden_sizes.size();
  const std::size_t slopes_at = expected;
  if (arch.activation == Activation::PReLU) expected += n_hidden;
  if (params.size() != expected || input.size() != arch.input_dim) throw ShapeError("naive_forward: size mismatch");

  std::vector<double> x = input;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l], out = dims[l + 1];
    std::vector<double> y(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += params[off + o * in + i] * x[i];
      y[o] = acc + params[off + in * out + o];
    }
    off += in * out + out;
    if (l < n_hidden) {
      const double slope = arch.activation == Activation::PReLU ? params[slopes_at + l] : 0.0;
      for (double& v : y) v = activate(arch.activation, v, slope);
    }
    x = std::move(y);
  }
  return x;
}

std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h, const std::vector<std::size_t>& coords) {
  std::vector<double> g;
  g.reserve(coords.size());
  for (std::size_t c : coords) {
    const double orig = x[c];
    x[c] = orig + h;
    const double up = f(x);
    x[c] = orig - h;
    const double down = f(x);
    x[c] = orig;
    g.push_back((up - down) / (2.0 * h));
  }
  return g;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

GradientCheck check_mlp_gradient(const MlpArchitecture& arch, Rng& rng, std::size_t max_coords, double h) {
  constexpr std::size_t kBatch = 3;
  std::normal_distribution<double> normal(0.0, 1.0);

  FlatParams params = init_params(arch, rng);
  if (arch.activation == Activation::PReLU) {
    // move slopes away from their initial value so their gradient is not trivially shared
    ParamLayout layout(arch);
    for (std::size_t l = 0; l < arch.hidden_sizes.size(); ++l) params[layout.slope_offset(l)] = 0.1 + 0.2 * l;
  }
  std::vector<std::vector<double>> inputs(kBatch, std::vector<double>(arch.input_dim));
  std::vector<std::vector<double>> upstream(kBatch, std::vector<double>(arch.output_dim));
  for (auto& row : inputs)
    for (double& v : row) v = normal(rng);
  for (auto& row : upstream)
    for (double& v : row) v = normal(rng);

  ForwardTrace trace;
  forward_batch(arch, params, rows_to_matrix(inputs), &trace);
  GradientBuffer grad(params.size());
  const Matrix dinput = backward_batch(arch, params, trace, rows_to_matrix(upstream), grad);

  auto loss_params = [&](const std::vector<double>& p) {
    double l = 0.0;
    for (std::size_t b = 0; b < kBatch; ++b) {
      const auto y = naive_forward(arch, p, inputs[b]);
      for (std::size_t o = 0; o < y.size(); ++o) l += upstream[b][o] * y[o];
    }
    return l;
  };

  std::vector<std::size_t> coords(params.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  if (coords.size() > max_coords) {
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coords);
  }
  if (arch.activation == Activation::PReLU) {
    ParamLayout layout(arch);
    for (std::size_t l = 0; l < arch.hidden_sizes.size(); ++l) {
      const std::size_t s = layout.slope_offset(l);
      if (std::find(coords.begin(), coords.end(), s) == coords.end()) coords.push_back(s);
    }
  }

  GradientCheck result;
  const auto fd = central_differences(loss_params, params.values, h, coords);
  for (std::size_t k = 0; k < coords.size(); ++k)
    result.max_relative_error = std::max(result.max_relative_error, relative_error(grad.values[coords[k]], fd[k]));
  result.coordinates = coords.size();

  // input gradient of the first sample
  auto loss_input = [&](const std::vector<double>& x) {
    const auto y = naive_forward(arch, params.values, x);
    double l = 0.0;
    for (std::size_t o = 0; o < y.size(); ++o) l += upstream[0][o] * y[o];
    return l;
  };
  std::vector<std::size_t> in_coords(arch.input_dim);
  for (std::size_t i = 0; i < in_coords.size(); ++i) in_coords[i] = i;
  const auto fd_in = central_differences(loss_input, inputs[0], h, in_coords);
  for (std::size_t i = 0; i < in_coords.size(); ++i)
    result.max_relative_error = std::max(result.max_relative_error, relative_error(dinput(0, i), fd_in[i]));
  result.coordinates += in_coords.size();
  return result;
}

}  // namespace seforge::verify

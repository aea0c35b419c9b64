#include "kpg/numkit.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "kpg/kernels.hpp"

namespace kpg {

std::vector<std::size_t> MlpSpec::layer_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.reserve(hidden_sizes.size() + 2);
  sizes.push_back(input_dim);
  sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  sizes.push_back(output_dim);
  return sizes;
}

std::size_t MlpSpec::param_count() const {
  const auto sizes = layer_sizes();
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    count += sizes[l + 1] * sizes[l] + sizes[l + 1];
  }
  return count;
}

void MlpSpec::validate() const {
  if (input_dim == 0) throw ContractError("MlpSpec: input_dim must be >= 1");
  if (output_dim == 0) throw ContractError("MlpSpec: output_dim must be >= 1");
  for (std::size_t h : hidden_sizes) {
    if (h == 0) throw ContractError("MlpSpec: hidden sizes must be >= 1");
  }
  if (activations.size() != hidden_sizes.size()) {
    throw ContractError(
        "MlpSpec: need exactly one activation per hidden layer (got " +
        std::to_string(activations.size()) + " for " +
        std::to_string(hidden_sizes.size()) + " hidden layers)");
  }
}

MlpState MlpState::zeros(const MlpSpec& spec) {
  spec.validate();
  MlpState net;
  net.spec = spec;
  const auto sizes = spec.layer_sizes();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    net.weights.emplace_back(sizes[l + 1], sizes[l]);
    net.biases.emplace_back(sizes[l + 1], 0.0);
  }
  return net;
}

MlpState MlpState::init(const MlpSpec& spec, Rng& rng) {
  MlpState net = zeros(spec);
  for (auto& w : net.weights) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    for (double& v : w.data) v = rng.uniform(-limit, limit);
  }
  return net;
}

ParamVector MlpState::flatten() const {
  ParamVector out;
  out.reserve(param_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.insert(out.end(), weights[l].data.begin(), weights[l].data.end());
    out.insert(out.end(), biases[l].begin(), biases[l].end());
  }
  return out;
}

void MlpState::unflatten(std::span<const double> params) {
  if (params.size() != param_count()) {
    throw ShapeError("MlpState::unflatten: expected " +
                     std::to_string(param_count()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    auto& w = weights[l];
    std::memcpy(w.data.data(), params.data() + off,
                w.data.size() * sizeof(double));
    off += w.data.size();
    std::memcpy(biases[l].data(), params.data() + off,
                biases[l].size() * sizeof(double));
    off += biases[l].size();
  }
}

namespace {

void check_input_dim(const MlpState& net, std::size_t got) {
  if (got != net.spec.input_dim) {
    throw ShapeError("mlp forward: input has dimension " + std::to_string(got) +
                     ", network expects " + std::to_string(net.spec.input_dim));
  }
}

}  // namespace

const std::vector<double>& mlp_forward_cached(const MlpState& net,
                                              std::span<const double> input,
                                              ForwardCache& cache) {
  check_input_dim(net, input.size());
  const auto& k = kern::active();
  const std::size_t layers = net.weights.size();
  cache.acts.resize(layers + 1);
  cache.acts[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = net.weights[l];
    auto& out = cache.acts[l + 1];
    out.resize(w.rows);
    k.matvec(w.rows, w.cols, w.data.data(), cache.acts[l].data(),
             net.biases[l].data(), out.data());
    if (l + 1 < layers && net.spec.activations[l] == Act::kTanh) {
      for (double& v : out) v = std::tanh(v);
    }
  }
  return cache.acts.back();
}

std::vector<double> mlp_forward(const MlpState& net,
                                std::span<const double> input) {
  ForwardCache cache;
  return mlp_forward_cached(net, input, cache);
}

std::vector<double> mlp_backward_acc(const MlpState& net,
                                     const ForwardCache& cache,
                                     std::span<const double> output_grad,
                                     std::span<double> param_grad_acc) {
  const std::size_t layers = net.weights.size();
  if (cache.acts.size() != layers + 1) {
    throw ContractError("mlp_backward_acc: cache does not match the network");
  }
  if (output_grad.size() != net.spec.output_dim) {
    throw ShapeError("mlp_backward_acc: output_grad has dimension " +
                     std::to_string(output_grad.size()) + ", expected " +
                     std::to_string(net.spec.output_dim));
  }
  if (param_grad_acc.size() != net.param_count()) {
    throw ShapeError("mlp_backward_acc: gradient buffer has wrong length");
  }
  const auto& k = kern::active();

  // Flatten offsets of (W_l, b_l).
  std::vector<std::size_t> w_off(layers), b_off(layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    w_off[l] = off;
    off += net.weights[l].data.size();
    b_off[l] = off;
    off += net.biases[l].size();
  }

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  std::vector<double> next(net.spec.input_dim);
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& w = net.weights[l];
    k.rank1_acc(w.rows, w.cols, param_grad_acc.data() + w_off[l], delta.data(),
                cache.acts[l].data());
    k.axpy(w.rows, 1.0, delta.data(), param_grad_acc.data() + b_off[l]);
    next.assign(w.cols, 0.0);
    k.matvec_t_acc(w.rows, w.cols, w.data.data(), delta.data(), next.data());
    if (l > 0 && net.spec.activations[l - 1] == Act::kTanh) {
      // cache.acts[l] holds tanh(z); tanh'(z) = 1 - tanh(z)^2.
      const auto& h = cache.acts[l];
      for (std::size_t i = 0; i < next.size(); ++i) {
        next[i] *= 1.0 - h[i] * h[i];
      }
    }
    delta.swap(next);
  }
  return delta;  // gradient with respect to the input
}

std::pair<ParamVector, std::vector<double>> mlp_backward(
    const MlpState& net, std::span<const double> input,
    std::span<const double> output_grad) {
  ForwardCache cache;
  mlp_forward_cached(net, input, cache);
  ParamVector param_grad(net.param_count(), 0.0);
  auto input_grad = mlp_backward_acc(net, cache, output_grad, param_grad);
  return {std::move(param_grad), std::move(input_grad)};
}

std::vector<double> mlp_jvp(const MlpState& net, const ForwardCache& cache,
                            std::span<const double> param_tangent) {
  const std::size_t layers = net.weights.size();
  if (cache.acts.size() != layers + 1) {
    throw ContractError("mlp_jvp: cache does not match the network");
  }
  if (param_tangent.size() != net.param_count()) {
    throw ShapeError("mlp_jvp: tangent has wrong length");
  }
  const auto& k = kern::active();

  std::vector<double> dh(net.spec.input_dim, 0.0);  // input is held fixed
  std::vector<double> dz;
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = net.weights[l];
    // dz = dW_l h_l + W_l dh + db_l
    dz.resize(w.rows);
    k.matvec(w.rows, w.cols, param_tangent.data() + off, cache.acts[l].data(),
             param_tangent.data() + off + w.data.size(), dz.data());
    off += w.data.size() + w.rows;
    if (l > 0) {  // at l == 0 the input tangent is zero, so W dh vanishes
      std::vector<double> wdh(w.rows);
      k.matvec(w.rows, w.cols, w.data.data(), dh.data(), nullptr, wdh.data());
      k.axpy(w.rows, 1.0, wdh.data(), dz.data());
    }
    if (l + 1 < layers && net.spec.activations[l] == Act::kTanh) {
      const auto& h = cache.acts[l + 1];
      for (std::size_t i = 0; i < dz.size(); ++i) dz[i] *= 1.0 - h[i] * h[i];
    }
    dh = dz;
  }
  return dh;
}

AdamState AdamState::for_params(std::size_t n, double learning_rate) {
  AdamState s;
  s.first_moment.assign(n, 0.0);
  s.second_moment.assign(n, 0.0);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(AdamState& state, ParamVector& params, const ParamVector& grad) {
  const std::size_t n = params.size();
  if (grad.size() != n || state.first_moment.size() != n ||
      state.second_moment.size() != n) {
    throw ShapeError("adam_step: parameter, gradient and moment lengths differ");
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 / (1.0 - std::pow(state.beta1, t));
  const double bc2 = 1.0 / (1.0 - std::pow(state.beta2, t));
  kern::active().adam(n, params.data(), state.first_moment.data(),
                      state.second_moment.data(), grad.data(),
                      state.learning_rate, state.beta1, state.beta2,
                      state.epsilon, bc1, bc2);
}

ParamVector finite_diff_grad(const std::function<double(const ParamVector&)>& f,
                             const ParamVector& at, double h) {
  if (!(h > 0.0)) throw ContractError("finite_diff_grad: h must be positive");
  ParamVector grad(at.size());
  ParamVector point = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    point[i] = at[i] + h;
    const double fp = f(point);
    point[i] = at[i] - h;
    const double fm = f(point);
    point[i] = at[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: objective returned a non-finite value");
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace kpg

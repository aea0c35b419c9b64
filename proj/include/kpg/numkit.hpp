#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "kpg/errors.hpp"
#include "kpg/rng.hpp"

namespace kpg {

// Flattened parameter (or gradient) vector. Layout for a network is
// [W_0 row-major, b_0, W_1, b_1, ...] with any extra parameters appended by
// the owning model.
using ParamVector = std::vector<double>;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
};

enum class Act { kTanh, kIdentity };

// Fully connected network shape. Activations apply to hidden layers only; the
// output layer is always linear.
struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_sizes;
  std::vector<Act> activations;  // one entry per hidden layer
  std::size_t output_dim = 0;

  // [input_dim, hidden..., output_dim]
  std::vector<std::size_t> layer_sizes() const;
  std::size_t param_count() const;
  void validate() const;
};

struct MlpState {
  MlpSpec spec;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  static MlpState zeros(const MlpSpec& spec);
  // Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out)), drawn in
  // row-major order layer by layer), zero biases.
  static MlpState init(const MlpSpec& spec, Rng& rng);

  std::size_t param_count() const { return spec.param_count(); }
  ParamVector flatten() const;
  void unflatten(std::span<const double> params);
};

// Post-activation values for every layer; acts[0] is the input and
// acts.back() the network output. Reused across calls to avoid reallocating
// in hot loops.
struct ForwardCache {
  std::vector<std::vector<double>> acts;
};

std::vector<double> mlp_forward(const MlpState& net,
                                std::span<const double> input);

// Forward pass that records activations for a later backward or jvp call.
// Returns the output held inside the cache.
const std::vector<double>& mlp_forward_cached(const MlpState& net,
                                              std::span<const double> input,
                                              ForwardCache& cache);

// Backpropagates output_grad through the cached forward pass, accumulating
// d<output_grad, output>/d(params) into param_grad_acc (flatten layout) and
// returning the gradient with respect to the input.
std::vector<double> mlp_backward_acc(const MlpState& net,
                                     const ForwardCache& cache,
                                     std::span<const double> output_grad,
                                     std::span<double> param_grad_acc);

// Convenience wrapper: runs its own forward pass and returns
// (param_grad, input_grad).
std::pair<ParamVector, std::vector<double>> mlp_backward(
    const MlpState& net, std::span<const double> input,
    std::span<const double> output_grad);

// Jacobian-vector product: directional derivative of the network output along
// a parameter-space tangent, evaluated at the cached forward pass.
std::vector<double> mlp_jvp(const MlpState& net, const ForwardCache& cache,
                            std::span<const double> param_tangent);

struct AdamState {
  std::size_t step_count = 0;
  ParamVector first_moment;
  ParamVector second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(std::size_t n, double learning_rate = 1e-3);
};

// One bias-corrected ADAM update of params in place.
void adam_step(AdamState& state, ParamVector& params, const ParamVector& grad);

// Central finite-difference gradient of f at the given point.
ParamVector finite_diff_grad(const std::function<double(const ParamVector&)>& f,
                             const ParamVector& at, double h);

}  // namespace kpg

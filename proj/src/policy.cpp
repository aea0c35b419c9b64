#include "kpg/policy.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "kpg/errors.hpp"
#include "kpg/kernels.hpp"

namespace kpg {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_state_dim(const GaussianPolicy& policy, std::size_t got) {
  if (got != policy.obs_dim()) {
    throw ShapeError("policy: state has dimension " + std::to_string(got) +
                     ", expected " + std::to_string(policy.obs_dim()));
  }
}

void check_action_dim(std::size_t want, std::size_t got) {
  if (got != want) {
    throw ShapeError("policy: action has dimension " + std::to_string(got) +
                     ", expected " + std::to_string(want));
  }
}

}  // namespace

GaussianPolicy GaussianPolicy::init(std::size_t obs_dim, std::size_t action_dim,
                                    const std::vector<std::size_t>& hidden_sizes,
                                    const std::vector<Act>& activations,
                                    Rng& rng) {
  MlpSpec spec;
  spec.input_dim = obs_dim;
  spec.hidden_sizes = hidden_sizes;
  spec.activations = activations;
  spec.output_dim = action_dim;
  GaussianPolicy policy;
  policy.mean_net = MlpState::init(spec, rng);
  policy.log_std.assign(action_dim, 0.0);
  return policy;
}

ParamVector GaussianPolicy::get_params() const {
  ParamVector out = mean_net.flatten();
  out.insert(out.end(), log_std.begin(), log_std.end());
  return out;
}

void GaussianPolicy::set_params(std::span<const double> params) {
  if (params.size() != param_count()) {
    throw ShapeError("GaussianPolicy::set_params: expected " +
                     std::to_string(param_count()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  for (double v : params) {
    if (!std::isfinite(v)) {
      throw NumericError("GaussianPolicy::set_params: non-finite parameter");
    }
  }
  const std::size_t net_count = mean_net.param_count();
  mean_net.unflatten(params.subspan(0, net_count));
  std::memcpy(log_std.data(), params.data() + net_count,
              log_std.size() * sizeof(double));
}

GaussianHead dist(const GaussianPolicy& policy, std::span<const double> state) {
  check_state_dim(policy, state.size());
  GaussianHead head;
  head.mean = mlp_forward(policy.mean_net, state);
  head.log_std = policy.log_std;
  return head;
}

std::vector<double> sample_action(const GaussianHead& head, Rng& rng) {
  std::vector<double> action(head.mean.size());
  for (std::size_t i = 0; i < action.size(); ++i) {
    action[i] = head.mean[i] + std::exp(head.log_std[i]) * rng.normal();
  }
  return action;
}

double log_prob(const GaussianHead& head, std::span<const double> action) {
  check_action_dim(head.mean.size(), action.size());
  double lp = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double d = action[i] - head.mean[i];
    const double inv_var = std::exp(-2.0 * head.log_std[i]);
    lp += -0.5 * kLog2Pi - head.log_std[i] - 0.5 * d * d * inv_var;
  }
  return lp;
}

void grad_log_prob_acc(const GaussianPolicy& policy,
                       std::span<const double> state,
                       std::span<const double> action, double coeff,
                       std::span<double> acc, ForwardCache& workspace) {
  check_action_dim(policy.action_dim(), action.size());
  if (acc.size() != policy.param_count()) {
    throw ShapeError("grad_log_prob_acc: accumulator has wrong length");
  }
  const auto& mean = mlp_forward_cached(policy.mean_net, state, workspace);
  const std::size_t dim = action.size();
  const std::size_t net_count = policy.mean_net.param_count();
  std::vector<double> output_grad(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = action[i] - mean[i];
    const double inv_var = std::exp(-2.0 * policy.log_std[i]);
    // d log pi / d mean_i, scaled by the caller's coefficient.
    output_grad[i] = coeff * d * inv_var;
    // d log pi / d log_std_i = (a - mu)^2 / sigma^2 - 1.
    acc[net_count + i] += coeff * (d * d * inv_var - 1.0);
  }
  mlp_backward_acc(policy.mean_net, workspace, output_grad,
                   acc.subspan(0, net_count));
}

ParamVector grad_log_prob(const GaussianPolicy& policy,
                          std::span<const double> state,
                          std::span<const double> action) {
  ParamVector grad(policy.param_count(), 0.0);
  ForwardCache workspace;
  grad_log_prob_acc(policy, state, action, 1.0, grad, workspace);
  return grad;
}

double mean_kl(const GaussianPolicy& old_policy,
               const GaussianPolicy& new_policy,
               const std::vector<std::vector<double>>& states) {
  if (old_policy.obs_dim() != new_policy.obs_dim() ||
      old_policy.action_dim() != new_policy.action_dim()) {
    throw ShapeError("mean_kl: policies have different dimensions");
  }
  if (states.empty()) throw ContractError("mean_kl: state set is empty");

  const std::size_t dim = old_policy.action_dim();
  // Per-dimension constants: writing the variance ratio as
  // exp(2 (ls_old - ls_new)) makes the KL exactly zero for identical
  // parameters instead of leaving exp round-off behind.
  std::vector<double> shift(dim), ratio(dim), inv_var_new(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double ls_old = old_policy.log_std[i];
    const double ls_new = new_policy.log_std[i];
    shift[i] = ls_new - ls_old;
    ratio[i] = std::exp(2.0 * (ls_old - ls_new));
    inv_var_new[i] = std::exp(-2.0 * ls_new);
  }

  ForwardCache cache_old, cache_new;
  double total = 0.0;
  for (const auto& state : states) {
    const auto& mu_old = mlp_forward_cached(old_policy.mean_net, state, cache_old);
    const auto& mu_new = mlp_forward_cached(new_policy.mean_net, state, cache_new);
    for (std::size_t i = 0; i < dim; ++i) {
      const double dmu = mu_old[i] - mu_new[i];
      total += shift[i] + 0.5 * ratio[i] + 0.5 * dmu * dmu * inv_var_new[i] - 0.5;
    }
  }
  return total / static_cast<double>(states.size());
}

FisherOperator::FisherOperator(const GaussianPolicy& policy,
                               std::vector<std::vector<double>> states,
                               double damping)
    : policy_(policy), states_(std::move(states)), damping_(damping) {
  if (states_.empty()) {
    throw ContractError("FisherOperator: state set is empty");
  }
  if (!(damping_ >= 0.0)) {
    throw ContractError("FisherOperator: damping must be >= 0");
  }
  inv_var_.resize(policy_.action_dim());
  for (std::size_t i = 0; i < inv_var_.size(); ++i) {
    inv_var_[i] = std::exp(-2.0 * policy_.log_std[i]);
  }
  caches_.resize(states_.size());
  for (std::size_t s = 0; s < states_.size(); ++s) {
    mlp_forward_cached(policy_.mean_net, states_[s], caches_[s]);
  }
}

void FisherOperator::apply(std::span<const double> v,
                           std::span<double> out) const {
  const std::size_t n = policy_.param_count();
  if (v.size() != n || out.size() != n) {
    throw ShapeError("FisherOperator::apply: vector has wrong length");
  }
  const std::size_t net_count = policy_.mean_net.param_count();
  const std::size_t dim = policy_.action_dim();
  std::fill(out.begin(), out.end(), 0.0);

  const auto v_net = v.subspan(0, net_count);
  auto out_net = out.subspan(0, net_count);
  std::vector<double> weighted(dim);
  for (std::size_t s = 0; s < states_.size(); ++s) {
    auto u = mlp_jvp(policy_.mean_net, caches_[s], v_net);
    for (std::size_t i = 0; i < dim; ++i) weighted[i] = u[i] * inv_var_[i];
    mlp_backward_acc(policy_.mean_net, caches_[s], weighted, out_net);
  }
  const double inv_n = 1.0 / static_cast<double>(states_.size());
  for (std::size_t i = 0; i < net_count; ++i) {
    out[i] = out[i] * inv_n + damping_ * v[i];
  }
  // The log_std block of the Fisher is state-independent: E[(z^2 - 1)^2] = 2.
  for (std::size_t i = 0; i < dim; ++i) {
    out[net_count + i] = (2.0 + damping_) * v[net_count + i];
  }
}

ParamVector FisherOperator::apply(std::span<const double> v) const {
  ParamVector out(policy_.param_count());
  apply(v, out);
  return out;
}

ParamVector fisher_vector_product(const GaussianPolicy& policy,
                                  const std::vector<std::vector<double>>& states,
                                  std::span<const double> v, double damping) {
  return FisherOperator(policy, states, damping).apply(v);
}

}  // namespace kpg

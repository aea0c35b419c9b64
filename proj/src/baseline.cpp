#include "kpg/baseline.hpp"

#include <cmath>
#include <cstring>

#include "kpg/errors.hpp"

namespace kpg {

namespace {

// Bitwise key: two states collide only if every coordinate is binary-equal.
std::string state_key(std::span<const double> state) {
  std::string key(state.size() * sizeof(double), '\0');
  std::memcpy(key.data(), state.data(), key.size());
  return key;
}

// Degenerate spread (constant data) falls back to 1 so normalization stays a
// well-behaved affine map.
double effective_std(double variance) {
  const double sd = variance > 0.0 ? std::sqrt(variance) : 0.0;
  return sd > 1e-8 ? sd : 1.0;
}

}  // namespace

BaselineModel BaselineModel::zero() {
  BaselineModel model;
  model.kind_ = BaselineKind::kZero;
  return model;
}

BaselineModel BaselineModel::tabular() {
  BaselineModel model;
  model.kind_ = BaselineKind::kTabular;
  return model;
}

BaselineModel BaselineModel::mlp(std::size_t obs_dim, Rng& init_rng) {
  MlpSpec spec;
  spec.input_dim = obs_dim;
  spec.hidden_sizes = {32, 32};
  spec.activations = {Act::kTanh, Act::kIdentity};
  spec.output_dim = 1;
  return mlp_with_spec(spec, init_rng);
}

BaselineModel BaselineModel::mlp_with_spec(const MlpSpec& spec, Rng& init_rng) {
  if (spec.output_dim != 1) {
    throw ContractError("BaselineModel: regression net must have one output");
  }
  BaselineModel model;
  model.kind_ = BaselineKind::kMlp;
  model.net_ = MlpState::init(spec, init_rng);
  model.adam_ = AdamState::for_params(model.net_.param_count(), 1e-2);
  model.input_mean_.assign(spec.input_dim, 0.0);
  model.input_std_.assign(spec.input_dim, 1.0);
  return model;
}

std::vector<double> BaselineModel::normalize_input(
    std::span<const double> state) const {
  if (state.size() != net_.spec.input_dim) {
    throw ShapeError("baseline: state has wrong dimension");
  }
  std::vector<double> z(state.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = (state[i] - input_mean_[i]) / input_std_[i];
  }
  return z;
}

double BaselineModel::predict(std::span<const double> state) const {
  switch (kind_) {
    case BaselineKind::kZero:
      return 0.0;
    case BaselineKind::kMlp: {
      const auto z = normalize_input(state);
      const auto out = mlp_forward(net_, z);
      return target_mean_ + target_std_ * out[0];
    }
    case BaselineKind::kTabular: {
      const auto it = table_.find(state_key(state));
      if (it == table_.end()) {
        throw std::out_of_range("baseline: state not seen by tabular fit");
      }
      return it->second;
    }
  }
  throw ContractError("baseline: unknown kind");
}

std::vector<double> BaselineModel::predict_all(
    const std::vector<std::vector<double>>& states) const {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(predict(s));
  return out;
}

void BaselineModel::fit(const std::vector<std::vector<double>>& states,
                        const std::vector<double>& targets,
                        const FitConfig& config, Rng& rng) {
  if (states.empty()) throw ContractError("baseline fit: empty data");
  if (states.size() != targets.size()) {
    throw ContractError("baseline fit: states and targets differ in length");
  }
  if (kind_ == BaselineKind::kZero) return;
  if (kind_ == BaselineKind::kTabular) {
    for (std::size_t i = 0; i < states.size(); ++i) {
      table_[state_key(states[i])] = targets[i];
    }
    return;
  }

  if (config.adam_steps == 0 || config.minibatch == 0) {
    throw ContractError("baseline fit: adam_steps and minibatch must be >= 1");
  }
  const std::size_t n = states.size();
  const std::size_t dim = net_.spec.input_dim;

  // Refresh both normalizers from this fit's data.
  input_mean_.assign(dim, 0.0);
  for (const auto& s : states) {
    if (s.size() != dim) throw ShapeError("baseline fit: state has wrong dimension");
    for (std::size_t i = 0; i < dim; ++i) input_mean_[i] += s[i];
  }
  for (double& m : input_mean_) m /= static_cast<double>(n);
  std::vector<double> var(dim, 0.0);
  for (const auto& s : states) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = s[i] - input_mean_[i];
      var[i] += d * d;
    }
  }
  input_std_.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    input_std_[i] = effective_std(var[i] / static_cast<double>(n));
  }
  double t_sum = 0.0;
  for (double t : targets) t_sum += t;
  target_mean_ = t_sum / static_cast<double>(n);
  double t_var = 0.0;
  for (double t : targets) {
    const double d = t - target_mean_;
    t_var += d * d;
  }
  target_std_ = effective_std(t_var / static_cast<double>(n));

  adam_.learning_rate = config.learning_rate;
  ParamVector params = net_.flatten();
  ParamVector grad(params.size());
  ForwardCache cache;
  std::vector<double> output_grad(1);
  const double inv_m = 1.0 / static_cast<double>(config.minibatch);
  for (std::size_t step = 0; step < config.adam_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t b = 0; b < config.minibatch; ++b) {
      const std::size_t idx = rng.index(n);
      const auto z = normalize_input(states[idx]);
      const auto& out = mlp_forward_cached(net_, z, cache);
      const double target_z = (targets[idx] - target_mean_) / target_std_;
      output_grad[0] = 2.0 * (out[0] - target_z) * inv_m;
      mlp_backward_acc(net_, cache, output_grad, grad);
    }
    adam_step(adam_, params, grad);
    net_.unflatten(params);
  }
}

double BaselineModel::mse_loss(const std::vector<std::vector<double>>& states,
                               const std::vector<double>& targets) const {
  if (states.size() != targets.size()) {
    throw ContractError("baseline mse_loss: states and targets differ in length");
  }
  if (states.empty()) throw ContractError("baseline mse_loss: empty data");
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double err = predict(states[i]) - targets[i];
    total += err * err;
  }
  return total / static_cast<double>(states.size());
}

}  // namespace kpg

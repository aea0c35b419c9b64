#include "kpg/kfold.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "kpg/errors.hpp"
#include "kpg/kernels.hpp"
#include "kpg/rollout.hpp"

namespace kpg {

void RunConfig::validate() const {
  if (k < 1) throw ContractError("RunConfig: k must be >= 1");
  if (mode == Mode::kClassic && k != 1) {
    throw ContractError("RunConfig: classic mode requires k = 1");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ContractError("RunConfig: gamma must be in [0, 1]");
  }
  if (horizon < 1) throw ContractError("RunConfig: horizon must be >= 1");
  if (iterations < 1) throw ContractError("RunConfig: iterations must be >= 1");
  if (sample_budget < horizon) {
    throw ContractError("RunConfig: sample_budget must be >= horizon");
  }
  if (!(trust.delta > 0.0)) {
    throw ContractError("RunConfig: step size (delta) must be positive");
  }
  if (trust.cg_iters < 1) throw ContractError("RunConfig: cg_iters must be >= 1");
  if (!(trust.cg_damping >= 0.0)) {
    throw ContractError("RunConfig: cg_damping must be >= 0");
  }
  if (!(trust.backtrack_ratio > 0.0 && trust.backtrack_ratio < 1.0)) {
    throw ContractError("RunConfig: backtrack_ratio must be in (0, 1)");
  }
  if (trust.max_backtracks < 1) {
    throw ContractError("RunConfig: max_backtracks must be >= 1");
  }
  if (baseline_fit.adam_steps < 1 || baseline_fit.minibatch < 1) {
    throw ContractError("RunConfig: baseline fit counts must be >= 1");
  }
  if (!(baseline_fit.learning_rate > 0.0)) {
    throw ContractError("RunConfig: baseline learning rate must be positive");
  }
  if (workers < 1) throw ContractError("RunConfig: workers must be >= 1");
}

namespace {

double l2_norm(const ParamVector& v) {
  return std::sqrt(kern::active().dot(v.data(), v.data(), v.size()));
}

// States the policy acted in, flattened in trajectory order (terminal
// observations excluded: no action was taken there).
std::vector<std::vector<double>> visited_states(const Batch& batch) {
  std::vector<std::vector<double>> states;
  states.reserve(batch.total_steps);
  for (const auto& traj : batch.trajectories) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      states.push_back(traj.states[t]);
    }
  }
  return states;
}

std::vector<std::vector<double>> flat_actions(const Batch& batch) {
  std::vector<std::vector<double>> actions;
  actions.reserve(batch.total_steps);
  for (const auto& traj : batch.trajectories) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      actions.push_back(traj.actions[t]);
    }
  }
  return actions;
}

std::vector<double> flat_returns(const Batch& batch) {
  std::vector<double> returns;
  returns.reserve(batch.total_steps);
  for (const auto& traj : batch.trajectories) {
    returns.insert(returns.end(), traj.returns.begin(), traj.returns.end());
  }
  return returns;
}

void normalize_in_place(std::vector<double>& values) {
  if (values.empty()) return;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) {
    const double d = v - mean;
    var += d * d;
  }
  var /= static_cast<double>(values.size());
  const double scale = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& v : values) v = (v - mean) * scale;
}

std::pair<ParamVector, StepInfo> run_update(const GaussianPolicy& policy,
                                            Algo algo, const GradEstimate& est,
                                            const FisherOperator& fisher,
                                            const StepData& data,
                                            const TrustRegionConfig& trust) {
  if (algo == Algo::kTrpo) {
    return trpo_update(policy, est, fisher, data, trust);
  }
  return tnpg_update(policy, est, fisher, trust);
}

struct IterationOutcome {
  double mean_kl = 0.0;
  double grad_norm = 0.0;
  double baseline_loss = 0.0;
};

// One classic (previous-iteration baseline) update on the current batch.
IterationOutcome classic_iteration(const RunConfig& config,
                                   GaussianPolicy& policy, const Batch& batch,
                                   const BaselineModel& baseline,
                                   bool baseline_ready) {
  StepData data;
  data.states = visited_states(batch);
  data.actions = flat_actions(batch);
  const std::vector<double> returns = flat_returns(batch);

  data.advantages.resize(batch.total_steps);
  for (std::size_t i = 0; i < batch.total_steps; ++i) {
    const double b = baseline_ready ? baseline.predict(data.states[i]) : 0.0;
    data.advantages[i] = returns[i] - b;
  }

  IterationOutcome out;
  double sq = 0.0;
  for (double a : data.advantages) sq += a * a;
  out.baseline_loss = sq / static_cast<double>(batch.total_steps);

  if (config.normalize_advantages) normalize_in_place(data.advantages);

  TrajRefs refs;
  refs.reserve(batch.trajectories.size());
  for (const auto& traj : batch.trajectories) refs.push_back(&traj);
  const GradEstimate est =
      estimate_gradient_with_advantages(policy, refs, data.advantages);
  out.grad_norm = l2_norm(est.grad);

  const FisherOperator fisher(policy, data.states, config.trust.cg_damping);
  auto [params, info] =
      run_update(policy, config.algo, est, fisher, data, config.trust);

  const GaussianPolicy old_policy = policy;
  policy.set_params(params);
  out.mean_kl = mean_kl(old_policy, policy, data.states);
  return out;
}

// Per-fold baselines fit on the complement, then either parameter-space or
// gradient-space averaging across folds.
IterationOutcome kfold_iteration(const RunConfig& config,
                                 GaussianPolicy& policy, const Batch& batch,
                                 const BaselineModel& shared_baseline,
                                 std::size_t iteration) {
  const FoldPlan plan = make_folds(batch, config.k);
  const auto groups = plan.folds();
  const std::size_t K = config.k;

  // Global step offset of each trajectory, for scattering fold advantages
  // into a full-batch array.
  std::vector<std::size_t> offsets(batch.trajectories.size());
  std::size_t running = 0;
  for (std::size_t j = 0; j < batch.trajectories.size(); ++j) {
    offsets[j] = running;
    running += batch.trajectories[j].length();
  }

  IterationOutcome out;
  std::vector<ParamVector> fold_params;
  std::vector<ParamVector> fold_grads;
  std::vector<double> fold_surrogates;
  std::vector<std::size_t> fold_steps;
  std::vector<double> full_advantages(batch.total_steps, 0.0);
  double grad_norm_sum = 0.0;
  double sq_adv_sum = 0.0;

  const bool param_mode = config.mode == Mode::kParamKfold ||
                          config.mode == Mode::kParamKfoldScaled;
  TrustRegionConfig fold_trust = config.trust;
  if (config.mode == Mode::kParamKfoldScaled) {
    fold_trust.delta *= static_cast<double>(K);
  }

  for (std::size_t f = 0; f < K; ++f) {
    BaselineModel fold_baseline = shared_baseline;  // warm-started copy
    auto [train_states, train_returns] = complement_view(batch, plan, f);
    Rng fold_rng(mix_seed(config.seed, kStreamBaseline, iteration, f));
    fold_baseline.fit(train_states, train_returns, config.baseline_fit,
                      fold_rng);

    StepData data;
    std::size_t steps = 0;
    for (std::size_t j : groups[f]) steps += batch.trajectories[j].length();
    data.states.reserve(steps);
    data.actions.reserve(steps);
    data.advantages.reserve(steps);
    std::vector<std::size_t> global_index;
    global_index.reserve(steps);
    TrajRefs refs;
    refs.reserve(groups[f].size());
    for (std::size_t j : groups[f]) {
      const Trajectory& traj = batch.trajectories[j];
      refs.push_back(&traj);
      for (std::size_t t = 0; t < traj.length(); ++t) {
        data.states.push_back(traj.states[t]);
        data.actions.push_back(traj.actions[t]);
        const double adv =
            traj.returns[t] - fold_baseline.predict(traj.states[t]);
        data.advantages.push_back(adv);
        global_index.push_back(offsets[j] + t);
        sq_adv_sum += adv * adv;
      }
    }
    if (config.normalize_advantages) normalize_in_place(data.advantages);
    for (std::size_t i = 0; i < data.advantages.size(); ++i) {
      full_advantages[global_index[i]] = data.advantages[i];
    }

    const GradEstimate est =
        estimate_gradient_with_advantages(policy, refs, data.advantages);
    grad_norm_sum += l2_norm(est.grad);

    if (param_mode) {
      const FisherOperator fisher(policy, data.states, fold_trust.cg_damping);
      auto [params, info] =
          run_update(policy, config.algo, est, fisher, data, fold_trust);
      fold_params.push_back(std::move(params));
    } else {
      fold_grads.push_back(est.grad);
      fold_surrogates.push_back(est.surrogate_value);
      fold_steps.push_back(est.steps_used);
    }
  }

  out.baseline_loss = sq_adv_sum / static_cast<double>(batch.total_steps);
  const GaussianPolicy old_policy = policy;
  const auto all_states = visited_states(batch);

  if (param_mode) {
    out.grad_norm = grad_norm_sum / static_cast<double>(K);
    policy.set_params(average_param_vectors(std::move(fold_params)));
  } else {
    GradEstimate combined;
    combined.grad = average_param_vectors(std::move(fold_grads));
    combined.steps_used = batch.total_steps;
    double surrogate = 0.0;
    for (std::size_t f = 0; f < K; ++f) {
      surrogate += fold_surrogates[f] * static_cast<double>(fold_steps[f]);
    }
    combined.surrogate_value = surrogate / static_cast<double>(batch.total_steps);
    out.grad_norm = l2_norm(combined.grad);

    StepData data;
    data.states = all_states;
    data.actions = flat_actions(batch);
    data.advantages = std::move(full_advantages);
    const FisherOperator fisher(policy, data.states, config.trust.cg_damping);
    auto [params, info] =
        run_update(policy, config.algo, combined, fisher, data, config.trust);
    policy.set_params(params);
  }

  out.mean_kl = mean_kl(old_policy, policy, all_states);
  return out;
}

std::vector<IterationMetrics> run_loop(const RunConfig& config,
                                       GaussianPolicy& policy, const Env& env) {
  config.validate();
  if (policy.obs_dim() != env.spec().obs_dim ||
      policy.action_dim() != env.spec().action_dim) {
    throw ShapeError("run: policy and environment dimensions do not match");
  }
  const bool kfold_mode = config.mode != Mode::kClassic && config.k > 1;

  Rng baseline_init_rng(mix_seed(config.seed, kStreamBaselineInit));
  BaselineModel baseline =
      BaselineModel::mlp(env.spec().obs_dim, baseline_init_rng);
  bool baseline_ready = false;  // classic iteration 1 uses the zero baseline

  std::vector<IterationMetrics> metrics;
  metrics.reserve(config.iterations);
  for (std::size_t iter = 1; iter <= config.iterations; ++iter) {
    const auto start = std::chrono::steady_clock::now();
    try {
      Batch batch = sample_batch(policy, env, config.sample_budget,
                                 config.horizon,
                                 mix_seed(config.seed, kStreamRollout, iter),
                                 config.workers);
      double return_sum = 0.0;
      for (const auto& traj : batch.trajectories) {
        return_sum += traj.total_reward();
      }
      const double avg_return =
          return_sum / static_cast<double>(batch.trajectories.size());
      compute_returns(batch, config.gamma);

      const IterationOutcome outcome =
          kfold_mode
              ? kfold_iteration(config, policy, batch, baseline, iter)
              : classic_iteration(config, policy, batch, baseline,
                                  baseline_ready);

      // Advance the shared baseline on the full batch; the next iteration's
      // folds (or the classic estimator) warm-start from it.
      Rng fit_rng(mix_seed(config.seed, kStreamBaseline, iter, config.k));
      baseline.fit(visited_states(batch), flat_returns(batch),
                   config.baseline_fit, fit_rng);
      baseline_ready = true;

      IterationMetrics m;
      m.iteration = iter;
      m.avg_return = avg_return;
      m.mean_kl = outcome.mean_kl;
      m.grad_norm = outcome.grad_norm;
      m.baseline_loss = outcome.baseline_loss;
      m.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        start)
              .count();
      metrics.push_back(m);
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(iter) + ": " + e.what());
    }
  }
  return metrics;
}

}  // namespace

std::vector<IterationMetrics> run_classic(const RunConfig& config,
                                          GaussianPolicy& policy,
                                          const Env& env) {
  if (config.mode != Mode::kClassic) {
    throw ContractError("run_classic: config.mode is not classic");
  }
  return run_loop(config, policy, env);
}

std::vector<IterationMetrics> run_param_kfold(const RunConfig& config,
                                              GaussianPolicy& policy,
                                              const Env& env) {
  if (config.mode != Mode::kParamKfold &&
      config.mode != Mode::kParamKfoldScaled) {
    throw ContractError("run_param_kfold: config.mode is not a param mode");
  }
  return run_loop(config, policy, env);
}

std::vector<IterationMetrics> run_grad_kfold(const RunConfig& config,
                                             GaussianPolicy& policy,
                                             const Env& env) {
  if (config.mode != Mode::kGradKfold) {
    throw ContractError("run_grad_kfold: config.mode is not grad_kfold");
  }
  return run_loop(config, policy, env);
}

std::vector<IterationMetrics> run(const RunConfig& config,
                                  GaussianPolicy& policy, const Env& env) {
  switch (config.mode) {
    case Mode::kClassic:
      return run_classic(config, policy, env);
    case Mode::kParamKfold:
    case Mode::kParamKfoldScaled:
      return run_param_kfold(config, policy, env);
    case Mode::kGradKfold:
      return run_grad_kfold(config, policy, env);
  }
  throw ContractError("run: unknown mode");
}

double performance(const std::vector<IterationMetrics>& metrics) {
  if (metrics.empty()) throw ContractError("performance: empty metrics");
  double total = 0.0;
  for (const auto& m : metrics) total += m.avg_return;
  return total / static_cast<double>(metrics.size());
}

}  // namespace kpg

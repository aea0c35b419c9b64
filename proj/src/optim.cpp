#include "kpg/optim.hpp"

#include <cmath>
#include <string>

#include "kpg/errors.hpp"
#include "kpg/kernels.hpp"

namespace kpg {

namespace {

std::size_t total_steps(const TrajRefs& trajectories) {
  std::size_t total = 0;
  for (const Trajectory* traj : trajectories) total += traj->length();
  return total;
}

double l2_norm(std::span<const double> v) {
  return std::sqrt(kern::active().dot(v.data(), v.data(), v.size()));
}

}  // namespace

GradEstimate estimate_gradient_with_advantages(
    const GaussianPolicy& policy, const TrajRefs& trajectories,
    std::span<const double> advantages) {
  const std::size_t steps = total_steps(trajectories);
  if (steps == 0) {
    throw ContractError("estimate_gradient: no steps in the trajectory set");
  }
  if (advantages.size() != steps) {
    throw ContractError("estimate_gradient: advantage count (" +
                        std::to_string(advantages.size()) +
                        ") does not match step count (" +
                        std::to_string(steps) + ")");
  }

  GradEstimate est;
  est.grad.assign(policy.param_count(), 0.0);
  est.steps_used = steps;
  ForwardCache workspace;
  double surrogate = 0.0;
  std::size_t idx = 0;
  for (const Trajectory* traj : trajectories) {
    for (std::size_t t = 0; t < traj->length(); ++t) {
      const auto& state = traj->states[t];
      const auto& action = traj->actions[t];
      const double adv = advantages[idx];
      grad_log_prob_acc(policy, state, action, adv, est.grad, workspace);
      // The cached forward pass already holds the mean for this state.
      GaussianHead head;
      head.mean = workspace.acts.back();
      head.log_std = policy.log_std;
      surrogate += log_prob(head, action) * adv;
      ++idx;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(steps);
  kern::active().scal(est.grad.size(), inv_n, est.grad.data());
  est.surrogate_value = surrogate * inv_n;
  for (double g : est.grad) {
    if (!std::isfinite(g)) {
      throw NumericError("estimate_gradient: non-finite gradient component");
    }
  }
  return est;
}

GradEstimate estimate_gradient(const GaussianPolicy& policy,
                               const TrajRefs& trajectories,
                               std::span<const double> baseline_values) {
  const std::size_t steps = total_steps(trajectories);
  if (baseline_values.size() != steps) {
    throw ContractError(
        "estimate_gradient: baseline values do not align with steps");
  }
  std::vector<double> advantages(steps);
  std::size_t idx = 0;
  for (const Trajectory* traj : trajectories) {
    if (traj->returns.size() != traj->length()) {
      throw ContractError("estimate_gradient: returns not computed");
    }
    for (std::size_t t = 0; t < traj->length(); ++t, ++idx) {
      advantages[idx] = traj->returns[t] - baseline_values[idx];
    }
  }
  return estimate_gradient_with_advantages(policy, trajectories, advantages);
}

GradEstimate estimate_gradient(const GaussianPolicy& policy, const Batch& batch,
                               std::span<const double> baseline_values) {
  TrajRefs refs;
  refs.reserve(batch.trajectories.size());
  for (const auto& traj : batch.trajectories) refs.push_back(&traj);
  return estimate_gradient(policy, refs, baseline_values);
}

CgResult cg_solve(const LinearOp& apply_a, const ParamVector& b,
                  std::size_t iters, double tol) {
  if (iters < 1) throw ContractError("cg_solve: iters must be >= 1");
  const auto& k = kern::active();
  const std::size_t n = b.size();

  CgResult result;
  result.x.assign(n, 0.0);
  ParamVector r = b;
  ParamVector p = b;
  ParamVector ap(n);
  double rs = k.dot(r.data(), r.data(), n);
  if (!std::isfinite(rs)) throw NumericError("cg_solve: non-finite input");
  result.residual_norm = std::sqrt(rs);
  if (result.residual_norm <= tol) return result;

  for (std::size_t i = 0; i < iters; ++i) {
    apply_a(p, ap);
    const double pap = k.dot(p.data(), ap.data(), n);
    if (!std::isfinite(pap)) {
      throw NumericError("cg_solve: non-finite curvature");
    }
    if (pap <= 0.0) {
      throw NumericError("cg_solve: operator is not positive definite");
    }
    const double alpha = rs / pap;
    k.axpy(n, alpha, p.data(), result.x.data());
    k.axpy(n, -alpha, ap.data(), r.data());
    const double rs_next = k.dot(r.data(), r.data(), n);
    if (!std::isfinite(rs_next)) {
      throw NumericError("cg_solve: non-finite residual");
    }
    result.iterations = i + 1;
    result.residual_norm = std::sqrt(rs_next);
    if (result.residual_norm <= tol) break;
    const double beta = rs_next / rs;
    k.scal(n, beta, p.data());
    k.axpy(n, 1.0, r.data(), p.data());
    rs = rs_next;
  }
  return result;
}

namespace {

struct NaturalStep {
  ParamVector step;  // already scaled to the KL radius
  double quad_form = 0.0;
  double cg_residual = 0.0;
  double scale = 0.0;
  bool zero_grad = false;
};

constexpr double kCgTol = 1e-10;

NaturalStep natural_step(const GaussianPolicy& policy, const GradEstimate& est,
                         const FisherOperator& fisher,
                         const TrustRegionConfig& config) {
  if (est.grad.size() != policy.param_count()) {
    throw ShapeError("natural step: gradient length does not match policy");
  }
  if (!(config.delta > 0.0)) {
    throw ContractError("natural step: delta must be positive");
  }
  NaturalStep ns;
  if (l2_norm(est.grad) == 0.0) {
    ns.step.assign(est.grad.size(), 0.0);
    ns.zero_grad = true;
    return ns;
  }
  CgResult cg = cg_solve(
      [&fisher](std::span<const double> v, std::span<double> out) {
        fisher.apply(v, out);
      },
      est.grad, config.cg_iters, kCgTol);
  ns.cg_residual = cg.residual_norm;
  const ParamVector fd = fisher.apply(cg.x);
  ns.quad_form = kern::active().dot(cg.x.data(), fd.data(), cg.x.size());
  if (!(ns.quad_form > 0.0) || !std::isfinite(ns.quad_form)) {
    throw NumericError("natural step: d^T (F + damping I) d must be positive");
  }
  ns.scale = std::sqrt(2.0 * config.delta / ns.quad_form);
  ns.step = std::move(cg.x);
  kern::active().scal(ns.step.size(), ns.scale, ns.step.data());
  return ns;
}

void check_step_data(const GaussianPolicy& policy, const StepData& data) {
  if (data.states.size() != data.actions.size() ||
      data.states.size() != data.advantages.size()) {
    throw ContractError("trpo_update: states, actions and advantages differ in length");
  }
  if (data.states.empty()) {
    throw ContractError("trpo_update: no evaluation data");
  }
  (void)policy;
}

}  // namespace

std::pair<ParamVector, StepInfo> tnpg_update(const GaussianPolicy& policy,
                                             const GradEstimate& est,
                                             const FisherOperator& fisher,
                                             const TrustRegionConfig& config) {
  NaturalStep ns = natural_step(policy, est, fisher, config);
  StepInfo info;
  info.quad_form = ns.quad_form;
  info.cg_residual = ns.cg_residual;
  info.step_scale = ns.scale;
  ParamVector params = policy.get_params();
  kern::active().axpy(params.size(), 1.0, ns.step.data(), params.data());
  return {std::move(params), info};
}

std::pair<ParamVector, StepInfo> trpo_update(const GaussianPolicy& policy,
                                             const GradEstimate& est,
                                             const FisherOperator& fisher,
                                             const StepData& data,
                                             const TrustRegionConfig& config) {
  check_step_data(policy, data);
  NaturalStep ns = natural_step(policy, est, fisher, config);
  StepInfo info;
  info.quad_form = ns.quad_form;
  info.cg_residual = ns.cg_residual;
  const ParamVector old_params = policy.get_params();
  if (ns.zero_grad) {
    return {old_params, info};  // nothing to improve; keep the old point
  }

  const std::size_t n = data.states.size();
  std::vector<double> lp_old(n);
  double adv_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lp_old[i] = log_prob(dist(policy, data.states[i]), data.actions[i]);
    adv_mean += data.advantages[i];
  }
  adv_mean /= static_cast<double>(n);

  GaussianPolicy candidate = policy;
  ParamVector cand_params(old_params.size());
  for (std::size_t j = 0; j < config.max_backtracks; ++j) {
    const double shrink =
        std::pow(config.backtrack_ratio, static_cast<double>(j));
    for (std::size_t i = 0; i < cand_params.size(); ++i) {
      cand_params[i] = old_params[i] + shrink * ns.step[i];
    }
    candidate.set_params(cand_params);

    // Surrogate gain: mean(ratio * advantage) - mean(advantage), zero at the
    // old parameters and gradient-equal to the estimator there.
    double surrogate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double lp_new =
          log_prob(dist(candidate, data.states[i]), data.actions[i]);
      surrogate += std::exp(lp_new - lp_old[i]) * data.advantages[i];
    }
    surrogate /= static_cast<double>(n);
    const double improvement = surrogate - adv_mean;
    const double kl = mean_kl(policy, candidate, data.states);

    if (improvement >= 0.0 && kl <= config.delta) {
      info.accepted = true;
      info.backtracks = j;
      info.step_scale = ns.scale * shrink;
      info.improvement = improvement;
      info.measured_kl = kl;
      return {std::move(cand_params), info};
    }
    info.improvement = improvement;
    info.measured_kl = kl;
  }
  info.accepted = false;
  info.backtracks = config.max_backtracks;
  info.step_scale = 0.0;
  return {old_params, info};
}

ParamVector average_param_vectors(std::vector<ParamVector> vectors) {
  if (vectors.empty()) {
    throw ContractError("average_param_vectors: empty input");
  }
  const std::size_t n = vectors[0].size();
  for (const auto& v : vectors) {
    if (v.size() != n) {
      throw ShapeError("average_param_vectors: length mismatch");
    }
  }
  const std::size_t m = vectors.size();
  // Pairwise tree reduction, not a running sum: for a power-of-two number of
  // identical vectors the sums are exact doublings, so the mean reproduces
  // the common vector bit-for-bit.
  for (std::size_t stride = 1; stride < m; stride *= 2) {
    for (std::size_t i = 0; i + stride < m; i += 2 * stride) {
      kern::active().axpy(n, 1.0, vectors[i + stride].data(),
                          vectors[i].data());
    }
  }
  kern::active().scal(n, 1.0 / static_cast<double>(m), vectors[0].data());
  return std::move(vectors[0]);
}

}  // namespace kpg

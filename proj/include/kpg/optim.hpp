#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "kpg/policy.hpp"
#include "kpg/rollout.hpp"

namespace kpg {

struct GradEstimate {
  ParamVector grad;
  // Mean over steps of log pi(a|s) * advantage; its gradient equals grad, so
  // it anchors the line-search surrogate.
  double surrogate_value = 0.0;
  std::size_t steps_used = 0;
};

struct TrustRegionConfig {
  double delta = 0.08;  // mean-KL radius
  std::size_t cg_iters = 10;
  double cg_damping = 0.1;
  double backtrack_ratio = 0.8;
  std::size_t max_backtracks = 10;
};

// Flattened per-step view of the data an update is evaluated on.
struct StepData {
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> actions;
  std::vector<double> advantages;
};

using TrajRefs = std::vector<const Trajectory*>;

// Policy-gradient estimate over the given trajectories:
//   grad = (1/total_steps) * sum_steps grad_log_prob(s, a) * (R - b(s)).
// baseline_values align one-to-one with steps in trajectory order; returns
// must be precomputed.
GradEstimate estimate_gradient(const GaussianPolicy& policy,
                               const TrajRefs& trajectories,
                               std::span<const double> baseline_values);
GradEstimate estimate_gradient(const GaussianPolicy& policy, const Batch& batch,
                               std::span<const double> baseline_values);

// Core estimator taking precomputed advantages (R - b, optionally normalized
// by the caller).
GradEstimate estimate_gradient_with_advantages(
    const GaussianPolicy& policy, const TrajRefs& trajectories,
    std::span<const double> advantages);

struct CgResult {
  ParamVector x;
  double residual_norm = 0.0;
  std::size_t iterations = 0;
};

using LinearOp =
    std::function<void(std::span<const double>, std::span<double>)>;

// Conjugate gradient for SPD operators, starting from x = 0. Stops at iters
// iterations or when the residual norm drops to tol.
CgResult cg_solve(const LinearOp& apply_a, const ParamVector& b,
                  std::size_t iters, double tol);

struct StepInfo {
  bool accepted = true;
  std::size_t backtracks = 0;   // line-search shrink count (TRPO)
  double step_scale = 0.0;      // sqrt(2 delta / d^T (F + damping I) d)
  double quad_form = 0.0;       // d^T (F + damping I) d
  double cg_residual = 0.0;
  double improvement = 0.0;     // surrogate gain of the returned params (TRPO)
  double measured_kl = 0.0;     // mean KL of the returned params (TRPO)
};

// Natural-gradient step to the KL radius: d = cg(F + damping I, g), new
// params = old + sqrt(2 delta / d^T (F+damping I) d) * d. No line search. A
// zero gradient yields a zero step.
std::pair<ParamVector, StepInfo> tnpg_update(const GaussianPolicy& policy,
                                             const GradEstimate& est,
                                             const FisherOperator& fisher,
                                             const TrustRegionConfig& config);

// TNPG step plus backtracking line search: candidates shrink the full step by
// backtrack_ratio^j and the first one with nonnegative surrogate improvement
// and mean KL <= delta is accepted; if none is, the old parameters are kept.
std::pair<ParamVector, StepInfo> trpo_update(const GaussianPolicy& policy,
                                             const GradEstimate& est,
                                             const FisherOperator& fisher,
                                             const StepData& data,
                                             const TrustRegionConfig& config);

// Mean of parameter vectors by pairwise tree reduction, so averaging K
// identical vectors is exact for any power-of-two K.
ParamVector average_param_vectors(std::vector<ParamVector> vectors);

}  // namespace kpg

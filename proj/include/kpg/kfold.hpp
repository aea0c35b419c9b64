#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kpg/baseline.hpp"
#include "kpg/envs.hpp"
#include "kpg/optim.hpp"
#include "kpg/policy.hpp"

namespace kpg {

// classic          - previous-iteration baseline, single update per batch
// param_kfold      - per-fold baselines and per-fold trust-region updates
//                    from the same starting point, averaged in parameter
//                    space
// param_kfold_scaled - param_kfold with the KL radius scaled by K inside
//                    each per-fold update
// grad_kfold       - per-fold baselines and gradients, averaged in gradient
//                    space, one update
enum class Mode { kClassic, kParamKfold, kParamKfoldScaled, kGradKfold };

enum class Algo { kTrpo, kTnpg };

struct RunConfig {
  Mode mode = Mode::kClassic;
  std::size_t k = 1;
  Algo algo = Algo::kTrpo;
  double gamma = 0.99;
  std::size_t horizon = 500;
  std::size_t iterations = 500;
  std::size_t sample_budget = 50000;
  TrustRegionConfig trust;
  FitConfig baseline_fit{10, 50, 1e-2};
  bool normalize_advantages = false;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const;
};

struct IterationMetrics {
  std::size_t iteration = 0;  // 1-based, strictly increasing
  double avg_return = 0.0;    // mean undiscounted episode return of the batch
  double mean_kl = 0.0;       // KL(previous policy, new policy) on batch states
  double grad_norm = 0.0;     // L2 of the estimate (mean over folds in param mode)
  double baseline_loss = 0.0; // mean squared advantage of the predictions used
  double wall_seconds = 0.0;
};

// Training loops. The policy is updated in place so the caller keeps the
// final parameters. K = 1 always runs the classic loop: with a single fold
// there are no "remaining partitions" to fit on, so the previous-iteration
// baseline is the K = 1 meaning of every mode.
std::vector<IterationMetrics> run_classic(const RunConfig& config,
                                          GaussianPolicy& policy,
                                          const Env& env);
std::vector<IterationMetrics> run_param_kfold(const RunConfig& config,
                                              GaussianPolicy& policy,
                                              const Env& env);
std::vector<IterationMetrics> run_grad_kfold(const RunConfig& config,
                                             GaussianPolicy& policy,
                                             const Env& env);

// Dispatches on config.mode.
std::vector<IterationMetrics> run(const RunConfig& config,
                                  GaussianPolicy& policy, const Env& env);

// Area under the return curve: mean of avg_return over iterations.
double performance(const std::vector<IterationMetrics>& metrics);

}  // namespace kpg

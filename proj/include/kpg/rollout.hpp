#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "kpg/envs.hpp"
#include "kpg/policy.hpp"

namespace kpg {

struct Trajectory {
  std::vector<std::vector<double>> states;   // length() + 1, incl. terminal obs
  std::vector<std::vector<double>> actions;  // length()
  std::vector<double> rewards;               // length()
  std::vector<double> returns;               // length(), after compute_returns

  std::size_t length() const { return rewards.size(); }
  double total_reward() const;
};

struct Batch {
  std::vector<Trajectory> trajectories;
  std::size_t total_steps = 0;
};

// Round-robin assignment of whole trajectories to folds: trajectory j goes to
// fold j mod k.
struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // trajectory index -> fold index

  // Trajectory indices grouped by fold, in increasing order within each fold.
  std::vector<std::vector<std::size_t>> folds() const;
};

// Samples whole episodes until total_steps reaches sample_budget. Each episode
// draws from its own RNG stream derived from (master_seed, episode index), so
// the batch is bitwise identical no matter how many workers run; workers only
// control how many episodes are simulated concurrently.
Batch sample_batch(const GaussianPolicy& policy, const Env& env,
                   std::size_t sample_budget, std::size_t horizon,
                   std::uint64_t master_seed, std::size_t workers = 1);

// Discounted reward-to-go by the backward recursion
// R_t = r_t + gamma * R_{t+1}.
void compute_returns(Trajectory& traj, double gamma);
void compute_returns(Batch& batch, double gamma);

// Requires 1 <= k < number of trajectories.
FoldPlan make_folds(const Batch& batch, std::size_t k);

// All (state, return) pairs from trajectories outside the given fold, in
// trajectory order. These are the regression data for the baseline that fold
// fold_index will use.
std::pair<std::vector<std::vector<double>>, std::vector<double>>
complement_view(const Batch& batch, const FoldPlan& plan,
                std::size_t fold_index);

}  // namespace kpg

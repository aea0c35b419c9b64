#include "kpg/rollout.hpp"

#include <exception>
#include <string>
#include <thread>

#include "kpg/errors.hpp"

namespace kpg {

double Trajectory::total_reward() const {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total;
}

namespace {

Trajectory rollout_episode(const GaussianPolicy& policy, const Env& env,
                           std::size_t horizon, std::uint64_t seed) {
  Rng rng(seed);
  Trajectory traj;
  traj.states.reserve(horizon + 1);
  traj.actions.reserve(horizon);
  traj.rewards.reserve(horizon);
  std::vector<double> state = env.reset(rng);
  for (std::size_t t = 0; t < horizon; ++t) {
    const GaussianHead head = dist(policy, state);
    std::vector<double> action = sample_action(head, rng);
    StepResult result = env.step(state, action);
    traj.states.push_back(std::move(state));
    traj.actions.push_back(std::move(action));
    traj.rewards.push_back(result.reward);
    state = std::move(result.next_state);
    if (result.done) break;
  }
  traj.states.push_back(std::move(state));  // terminal observation
  return traj;
}

}  // namespace

Batch sample_batch(const GaussianPolicy& policy, const Env& env,
                   std::size_t sample_budget, std::size_t horizon,
                   std::uint64_t master_seed, std::size_t workers) {
  if (horizon == 0) throw ContractError("sample_batch: horizon must be >= 1");
  if (sample_budget < horizon) {
    throw ContractError("sample_batch: sample_budget must be >= horizon");
  }
  if (workers == 0) workers = 1;

  Batch batch;
  std::size_t next_episode = 0;
  while (batch.total_steps < sample_budget) {
    const std::size_t wave = workers;
    std::vector<Trajectory> slots(wave);
    if (wave == 1) {
      slots[0] = rollout_episode(policy, env, horizon,
                                 mix_seed(master_seed, next_episode));
    } else {
      std::vector<std::exception_ptr> errors(wave);
      std::vector<std::thread> threads;
      threads.reserve(wave);
      for (std::size_t w = 0; w < wave; ++w) {
        threads.emplace_back([&, w] {
          try {
            slots[w] = rollout_episode(policy, env, horizon,
                                       mix_seed(master_seed, next_episode + w));
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    // Episodes enter the batch strictly in index order; any surplus from the
    // final wave is discarded so the cut point never depends on worker count.
    for (auto& traj : slots) {
      batch.total_steps += traj.length();
      batch.trajectories.push_back(std::move(traj));
      if (batch.total_steps >= sample_budget) break;
    }
    next_episode += wave;
  }
  return batch;
}

void compute_returns(Trajectory& traj, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ContractError("compute_returns: gamma must be in [0, 1]");
  }
  const std::size_t n = traj.rewards.size();
  traj.returns.assign(n, 0.0);
  double acc = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    acc = traj.rewards[t] + gamma * acc;
    traj.returns[t] = acc;
  }
}

void compute_returns(Batch& batch, double gamma) {
  for (auto& traj : batch.trajectories) compute_returns(traj, gamma);
}

std::vector<std::vector<std::size_t>> FoldPlan::folds() const {
  std::vector<std::vector<std::size_t>> groups(k);
  for (std::size_t j = 0; j < assignment.size(); ++j) {
    groups[assignment[j]].push_back(j);
  }
  return groups;
}

FoldPlan make_folds(const Batch& batch, std::size_t k) {
  const std::size_t n = batch.trajectories.size();
  if (k < 1) throw ContractError("make_folds: k must be >= 1");
  if (k >= n) {
    throw ContractError("make_folds: need more trajectories (" +
                        std::to_string(n) + ") than folds (" +
                        std::to_string(k) + ")");
  }
  FoldPlan plan;
  plan.k = k;
  plan.assignment.resize(n);
  for (std::size_t j = 0; j < n; ++j) plan.assignment[j] = j % k;
  return plan;
}

std::pair<std::vector<std::vector<double>>, std::vector<double>>
complement_view(const Batch& batch, const FoldPlan& plan,
                std::size_t fold_index) {
  if (plan.assignment.size() != batch.trajectories.size()) {
    throw ContractError("complement_view: fold plan does not match the batch");
  }
  if (fold_index >= plan.k) {
    throw ContractError("complement_view: fold index out of range");
  }
  std::vector<std::vector<double>> states;
  std::vector<double> returns;
  for (std::size_t j = 0; j < batch.trajectories.size(); ++j) {
    if (plan.assignment[j] == fold_index) continue;
    const Trajectory& traj = batch.trajectories[j];
    if (traj.returns.size() != traj.length()) {
      throw ContractError("complement_view: returns not computed yet");
    }
    for (std::size_t t = 0; t < traj.length(); ++t) {
      states.push_back(traj.states[t]);
      returns.push_back(traj.returns[t]);
    }
  }
  return {std::move(states), std::move(returns)};
}

}  // namespace kpg

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "kpg/envs.hpp"
#include "kpg/rollout.hpp"
#include "kpg/rng.hpp"
#include "testutil.hpp"

using kpg::Act;
using kpg::Batch;
using kpg::GaussianPolicy;
using kpg::Lqr1D;
using kpg::PointMass2D;
using kpg::Rng;
using kpg::Trajectory;

namespace {

GaussianPolicy lqr_policy(std::uint64_t seed) {
  Rng rng(seed);
  return testutil::random_policy(rng, 1, 1, {4}, {Act::kTanh});
}

bool batches_identical(const Batch& a, const Batch& b) {
  if (a.total_steps != b.total_steps) return false;
  if (a.trajectories.size() != b.trajectories.size()) return false;
  for (std::size_t j = 0; j < a.trajectories.size(); ++j) {
    const Trajectory& ta = a.trajectories[j];
    const Trajectory& tb = b.trajectories[j];
    if (ta.states != tb.states) return false;
    if (ta.actions != tb.actions) return false;
    if (ta.rewards != tb.rewards) return false;
  }
  return true;
}

// Fills returns with unique identifiers so fold membership can be traced.
void tag_returns(Batch& batch) {
  for (std::size_t j = 0; j < batch.trajectories.size(); ++j) {
    auto& traj = batch.trajectories[j];
    traj.returns.resize(traj.length());
    for (std::size_t t = 0; t < traj.length(); ++t) {
      traj.returns[t] = static_cast<double>(j * 1000 + t);
    }
  }
}

}  // namespace

TEST_CASE("total_reward sums the reward sequence") {
  Trajectory traj;
  traj.rewards = {1.0, -2.5, 0.25};
  CHECK(traj.total_reward() == doctest::Approx(-1.25).epsilon(1e-15));
}

TEST_CASE("budget equal to horizon yields one whole episode") {
  const Lqr1D env(5);
  const auto policy = lqr_policy(1);
  const auto batch = kpg::sample_batch(policy, env, 5, 5, 99);
  REQUIRE(batch.trajectories.size() == 1);
  CHECK(batch.total_steps == 5);
  const auto& traj = batch.trajectories[0];
  CHECK(traj.length() == 5);
  CHECK(traj.states.size() == 6);  // terminal observation included
  CHECK(traj.actions.size() == 5);
}

TEST_CASE("budget overshoot keeps the last episode whole") {
  const Lqr1D env(5);
  const auto policy = lqr_policy(1);
  const auto batch = kpg::sample_batch(policy, env, 12, 5, 7);
  CHECK(batch.trajectories.size() == 3);
  CHECK(batch.total_steps == 15);

  std::size_t recount = 0;
  for (const auto& traj : batch.trajectories) recount += traj.length();
  CHECK(recount == batch.total_steps);
}

TEST_CASE("sample_batch rejects degenerate budgets") {
  const Lqr1D env(5);
  const auto policy = lqr_policy(1);
  CHECK_THROWS_AS(kpg::sample_batch(policy, env, 3, 5, 0),
                  kpg::ContractError);
  CHECK_THROWS_AS(kpg::sample_batch(policy, env, 5, 0, 0),
                  kpg::ContractError);
}

TEST_CASE("episodes stop early at termination with the final state recorded") {
  // A deterministic policy that accelerates upward makes every episode leave
  // the |py| <= 1 band well before the horizon.
  kpg::MlpSpec spec;
  spec.input_dim = 4;
  spec.output_dim = 2;
  auto net = kpg::MlpState::zeros(spec);
  net.biases[0] = {0.0, 1.0};
  GaussianPolicy policy;
  policy.mean_net = net;
  policy.log_std = {-20.0, -20.0};

  const PointMass2D env(200);
  const auto batch = kpg::sample_batch(policy, env, 200, 200, 5);
  for (const auto& traj : batch.trajectories) {
    CHECK(traj.length() < 200);
    CHECK(traj.states.size() == traj.length() + 1);
    CHECK(std::abs(traj.states.back()[1]) > 1.0);
    // Every state before the last is still inside the band.
    for (std::size_t t = 0; t + 1 < traj.states.size(); ++t) {
      CHECK(std::abs(traj.states[t][1]) <= 1.0);
    }
  }
}

TEST_CASE("same seed reproduces the batch bit for bit") {
  const Lqr1D env(8);
  const auto policy = lqr_policy(2);
  const auto a = kpg::sample_batch(policy, env, 40, 8, 1234);
  const auto b = kpg::sample_batch(policy, env, 40, 8, 1234);
  CHECK(batches_identical(a, b));

  const auto c = kpg::sample_batch(policy, env, 40, 8, 1235);
  CHECK_FALSE(batches_identical(a, c));
}

TEST_CASE("worker count never changes the batch") {
  const auto policy = lqr_policy(3);
  const Lqr1D lqr(10);
  const auto reference = kpg::sample_batch(policy, lqr, 55, 10, 42, 1);
  for (const std::size_t workers : {2, 3, 4, 8}) {
    const auto parallel = kpg::sample_batch(policy, lqr, 55, 10, 42, workers);
    CHECK(batches_identical(reference, parallel));
  }

  // Early-terminating episodes shift the episode count; the cut must still
  // land on the same episode for every worker count.
  Rng prng(17);
  const auto pm_policy = testutil::random_policy(prng, 4, 2, {6}, {Act::kTanh});
  const PointMass2D pm(25);
  const auto pm_ref = kpg::sample_batch(pm_policy, pm, 120, 25, 7, 1);
  for (const std::size_t workers : {2, 5}) {
    CHECK(batches_identical(pm_ref,
                            kpg::sample_batch(pm_policy, pm, 120, 25, 7, workers)));
  }
}

TEST_CASE("returns for hand-checkable discounts") {
  Trajectory traj;
  traj.rewards = {1.0, 1.0, 1.0};

  kpg::compute_returns(traj, 0.0);
  CHECK(traj.returns == traj.rewards);

  kpg::compute_returns(traj, 1.0);
  CHECK(traj.returns == std::vector<double>{3.0, 2.0, 1.0});

  Trajectory two;
  two.rewards = {1.0, 1.0};
  kpg::compute_returns(two, 0.99);
  CHECK(two.returns[0] == doctest::Approx(1.99).epsilon(1e-15));
  CHECK(two.returns[1] == 1.0);

  CHECK_THROWS_AS(kpg::compute_returns(two, 1.5), kpg::ContractError);
  CHECK_THROWS_AS(kpg::compute_returns(two, -0.01), kpg::ContractError);
}

TEST_CASE("recursion equals the explicit reward-to-go sum on random episodes") {
  Rng rng(88);
  for (int episode = 0; episode < 1000; ++episode) {
    const std::size_t len = 1 + rng.index(64);
    Trajectory traj;
    traj.rewards.resize(len);
    for (double& r : traj.rewards) r = rng.uniform(-2.0, 2.0);

    for (const double gamma : {0.0, 0.5, 0.99, 1.0}) {
      kpg::compute_returns(traj, gamma);
      for (std::size_t t = 0; t < len; ++t) {
        // Recompute this entry from scratch, innermost term first, the same
        // float order as the recursion but without reusing returns[t+1].
        double expect = 0.0;
        for (std::size_t u = len; u-- > t;) {
          expect = traj.rewards[u] + gamma * expect;
        }
        CHECK(traj.returns[t] == expect);

        // Power-series form agrees to rounding error.
        double series = 0.0;
        double discount = 1.0;
        for (std::size_t u = t; u < len; ++u) {
          series += discount * traj.rewards[u];
          discount *= gamma;
        }
        CHECK(traj.returns[t] == doctest::Approx(series).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("returns invariant holds on sampled batches") {
  const Lqr1D env(6);
  const auto policy = lqr_policy(4);
  auto batch = kpg::sample_batch(policy, env, 30, 6, 3);
  kpg::compute_returns(batch, 0.99);
  for (const auto& traj : batch.trajectories) {
    REQUIRE(traj.returns.size() == traj.length());
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const double next = t + 1 < traj.length() ? traj.returns[t + 1] : 0.0;
      CHECK(traj.returns[t] == traj.rewards[t] + 0.99 * next);
    }
  }
}

TEST_CASE("round-robin fold assignment") {
  Batch batch;
  batch.trajectories.resize(4);

  const auto plan = kpg::make_folds(batch, 2);
  CHECK(plan.k == 2);
  CHECK(plan.assignment == std::vector<std::size_t>{0, 1, 0, 1});
  const auto groups = plan.folds();
  REQUIRE(groups.size() == 2);
  CHECK(groups[0] == std::vector<std::size_t>{0, 2});
  CHECK(groups[1] == std::vector<std::size_t>{1, 3});

  const auto single = kpg::make_folds(batch, 1);
  CHECK(single.folds()[0] == std::vector<std::size_t>{0, 1, 2, 3});

  Batch five;
  five.trajectories.resize(5);
  const auto uneven = kpg::make_folds(five, 4);
  const auto sizes = uneven.folds();
  CHECK(sizes[0].size() == 2);
  CHECK(sizes[1].size() == 1);
  CHECK(sizes[2].size() == 1);
  CHECK(sizes[3].size() == 1);
}

TEST_CASE("fold count must stay below the trajectory count") {
  Batch batch;
  batch.trajectories.resize(4);
  CHECK_THROWS_AS(kpg::make_folds(batch, 4), kpg::ContractError);
  CHECK_THROWS_AS(kpg::make_folds(batch, 9), kpg::ContractError);
  CHECK_THROWS_AS(kpg::make_folds(batch, 0), kpg::ContractError);
}

TEST_CASE("folds partition the batch") {
  Batch batch;
  batch.trajectories.resize(23);
  for (const std::size_t k : {1, 2, 3, 4, 7, 22}) {
    const auto plan = kpg::make_folds(batch, k);
    const auto groups = plan.folds();
    REQUIRE(groups.size() == k);
    std::vector<int> seen(23, 0);
    for (const auto& group : groups) {
      CHECK_FALSE(group.empty());
      for (std::size_t j : group) seen[j] += 1;
    }
    for (int count : seen) CHECK(count == 1);
  }
}

TEST_CASE("complement view concatenates everything outside the fold") {
  const Lqr1D env(5);
  const auto policy = lqr_policy(6);
  auto batch = kpg::sample_batch(policy, env, 20, 5, 9);
  REQUIRE(batch.trajectories.size() == 4);
  kpg::compute_returns(batch, 0.99);

  const auto plan = kpg::make_folds(batch, 2);
  const auto [states, returns] = kpg::complement_view(batch, plan, 1);
  CHECK(states.size() == 10);  // two excluded episodes of five steps each
  CHECK(returns.size() == 10);

  // The view walks trajectories 0 and 2 in order.
  CHECK(states[0] == batch.trajectories[0].states[0]);
  CHECK(returns[0] == batch.trajectories[0].returns[0]);
  CHECK(states[5] == batch.trajectories[2].states[0]);
  CHECK(returns[9] == batch.trajectories[2].returns[4]);

  CHECK_THROWS_AS(kpg::complement_view(batch, plan, 2), kpg::ContractError);
}

TEST_CASE("poisoning a fold leaves its own complement untouched") {
  const Lqr1D env(5);
  const auto policy = lqr_policy(8);
  auto batch = kpg::sample_batch(policy, env, 30, 5, 13);
  kpg::compute_returns(batch, 0.99);
  const auto plan = kpg::make_folds(batch, 2);

  const auto before = kpg::complement_view(batch, plan, 1);
  for (std::size_t j = 0; j < batch.trajectories.size(); ++j) {
    if (plan.assignment[j] != 1) continue;
    for (auto& r : batch.trajectories[j].returns) r = 1e9;
    for (auto& s : batch.trajectories[j].states) {
      for (auto& x : s) x = -1e9;
    }
  }
  const auto after = kpg::complement_view(batch, plan, 1);
  CHECK(before.first == after.first);
  CHECK(before.second == after.second);
}

TEST_CASE("complements cover each pair exactly k minus one times") {
  const Lqr1D env(4);
  const auto policy = lqr_policy(10);
  auto batch = kpg::sample_batch(policy, env, 36, 4, 21);
  REQUIRE(batch.trajectories.size() == 9);
  tag_returns(batch);

  for (const std::size_t k : {2, 3, 4}) {
    const auto plan = kpg::make_folds(batch, k);
    std::map<double, std::size_t> counts;
    for (std::size_t fold = 0; fold < k; ++fold) {
      const auto view = kpg::complement_view(batch, plan, fold);
      for (double tag : view.second) counts[tag] += 1;

      // Hygiene: nothing from the held-out fold leaks into its complement.
      for (double tag : view.second) {
        const auto traj_idx = static_cast<std::size_t>(tag) / 1000;
        CHECK(plan.assignment[traj_idx] != fold);
      }
    }
    CHECK(counts.size() == batch.total_steps);
    for (const auto& [tag, count] : counts) {
      CHECK(count == k - 1);
    }
  }
}

TEST_CASE("k equals one yields an empty training view") {
  const Lqr1D env(4);
  const auto policy = lqr_policy(12);
  auto batch = kpg::sample_batch(policy, env, 12, 4, 2);
  kpg::compute_returns(batch, 0.99);
  const auto plan = kpg::make_folds(batch, 1);
  const auto view = kpg::complement_view(batch, plan, 0);
  CHECK(view.first.empty());
  CHECK(view.second.empty());
}

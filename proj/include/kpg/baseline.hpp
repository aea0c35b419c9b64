#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kpg/numkit.hpp"
#include "kpg/rng.hpp"

namespace kpg {

enum class BaselineKind { kZero, kMlp, kTabular };

struct FitConfig {
  std::size_t adam_steps = 10;
  std::size_t minibatch = 50;
  double learning_rate = 1e-2;
};

// State-value baseline b(s). Three kinds:
//   zero    - predicts 0 everywhere (the iteration-0 baseline)
//   mlp     - small regression net fit by a fixed ADAM schedule, with input
//             and target standardization refreshed from each fit's data
//   tabular - exact state-to-value memory keyed on the bitwise state; used in
//             tests that need a perfect same-batch fit
// Models are value types: copying one yields an independent warm-started
// clone, which is how per-fold baselines are spawned.
class BaselineModel {
 public:
  static BaselineModel zero();
  static BaselineModel tabular();
  // Default regression net: hidden layers (32, 32), tanh after the first.
  static BaselineModel mlp(std::size_t obs_dim, Rng& init_rng);
  // Custom net shape for tests; spec.output_dim must be 1.
  static BaselineModel mlp_with_spec(const MlpSpec& spec, Rng& init_rng);

  BaselineKind kind() const { return kind_; }

  double predict(std::span<const double> state) const;
  std::vector<double> predict_all(
      const std::vector<std::vector<double>>& states) const;

  // mlp: refresh both normalizers from this data, then run
  // config.adam_steps ADAM updates of minibatch MSE, continuing from the
  // current weights. tabular: store exact pairs, later duplicates overwrite.
  // zero: no-op. Empty data is a contract error for every kind.
  void fit(const std::vector<std::vector<double>>& states,
           const std::vector<double>& targets, const FitConfig& config,
           Rng& rng);

  double mse_loss(const std::vector<std::vector<double>>& states,
                  const std::vector<double>& targets) const;

 private:
  BaselineModel() = default;

  std::vector<double> normalize_input(std::span<const double> state) const;

  BaselineKind kind_ = BaselineKind::kZero;

  // mlp kind
  MlpState net_;
  AdamState adam_;
  std::vector<double> input_mean_, input_std_;  // std entries pre-clamped
  double target_mean_ = 0.0;
  double target_std_ = 1.0;

  // tabular kind
  std::unordered_map<std::string, double> table_;
};

}  // namespace kpg

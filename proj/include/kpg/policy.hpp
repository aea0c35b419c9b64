#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kpg/numkit.hpp"
#include "kpg/rng.hpp"

namespace kpg {

// Mean and per-dimension log standard deviation of a diagonal Gaussian over
// actions, evaluated at one state.
struct GaussianHead {
  std::vector<double> mean;
  std::vector<double> log_std;
};

// Diagonal-Gaussian policy: an MLP produces the action mean, and a learnable
// state-independent log_std vector sets the exploration noise. The flattened
// parameter layout is [mean network params..., log_std].
struct GaussianPolicy {
  MlpState mean_net;
  std::vector<double> log_std;

  static GaussianPolicy init(std::size_t obs_dim, std::size_t action_dim,
                             const std::vector<std::size_t>& hidden_sizes,
                             const std::vector<Act>& activations, Rng& rng);

  std::size_t obs_dim() const { return mean_net.spec.input_dim; }
  std::size_t action_dim() const { return mean_net.spec.output_dim; }
  std::size_t param_count() const {
    return mean_net.param_count() + log_std.size();
  }

  ParamVector get_params() const;
  // Throws NumericError if any parameter is non-finite.
  void set_params(std::span<const double> params);
};

GaussianHead dist(const GaussianPolicy& policy, std::span<const double> state);

// mean + exp(log_std) * z with fresh standard normals, one per dimension in
// order.
std::vector<double> sample_action(const GaussianHead& head, Rng& rng);

double log_prob(const GaussianHead& head, std::span<const double> action);

// Gradient of log pi(action | state) with respect to the full parameter
// vector.
ParamVector grad_log_prob(const GaussianPolicy& policy,
                          std::span<const double> state,
                          std::span<const double> action);

// acc += coeff * grad_log_prob(state, action). The workspace avoids repeated
// allocation when called once per step of a batch.
void grad_log_prob_acc(const GaussianPolicy& policy,
                       std::span<const double> state,
                       std::span<const double> action, double coeff,
                       std::span<double> acc, ForwardCache& workspace);

// Mean over states of KL(old || new) between the two action distributions.
// Zero when the policies have identical parameters.
double mean_kl(const GaussianPolicy& old_policy,
               const GaussianPolicy& new_policy,
               const std::vector<std::vector<double>>& states);

// Applies (F + damping I) v, with F the Fisher information of the action
// distribution averaged over a fixed state set. The mean block is computed
// matrix-free as J^T diag(1/sigma^2) J via one jvp and one backward pass per
// state; the log_std block of F is the constant diagonal 2, and the cross
// blocks vanish. Forward activations are cached at construction so repeated
// applies (as in conjugate gradient) only pay for the two linear passes.
class FisherOperator {
 public:
  FisherOperator(const GaussianPolicy& policy,
                 std::vector<std::vector<double>> states, double damping);

  void apply(std::span<const double> v, std::span<double> out) const;
  ParamVector apply(std::span<const double> v) const;

  double damping() const { return damping_; }
  std::size_t state_count() const { return states_.size(); }

 private:
  GaussianPolicy policy_;
  std::vector<std::vector<double>> states_;
  std::vector<ForwardCache> caches_;
  std::vector<double> inv_var_;
  double damping_;
};

// One-shot convenience wrapper around FisherOperator.
ParamVector fisher_vector_product(const GaussianPolicy& policy,
                                  const std::vector<std::vector<double>>& states,
                                  std::span<const double> v, double damping);

}  // namespace kpg

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "kpg/numkit.hpp"
#include "kpg/policy.hpp"
#include "kpg/rng.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / denom;
}

// Worst relative error, with an absolute floor so that near-zero pairs are
// compared absolutely.
inline double max_err(const std::vector<double>& a,
                      const std::vector<double>& b, double abs_floor = 1e-12) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = std::abs(a[i] - b[i]);
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), abs_floor});
    worst = std::max(worst, diff / scale);
  }
  return worst;
}

inline std::vector<double> random_vec(kpg::Rng& rng, std::size_t n,
                                      double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline kpg::MlpState random_mlp(kpg::Rng& rng, std::size_t in,
                                std::vector<std::size_t> hidden,
                                std::vector<kpg::Act> acts, std::size_t out) {
  kpg::MlpSpec spec;
  spec.input_dim = in;
  spec.hidden_sizes = std::move(hidden);
  spec.activations = std::move(acts);
  spec.output_dim = out;
  return kpg::MlpState::init(spec, rng);
}

inline kpg::GaussianPolicy random_policy(kpg::Rng& rng, std::size_t obs,
                                         std::size_t act,
                                         std::vector<std::size_t> hidden,
                                         std::vector<kpg::Act> acts) {
  auto policy = kpg::GaussianPolicy::init(obs, act, hidden, acts, rng);
  for (double& ls : policy.log_std) ls = 0.3 * rng.normal();
  return policy;
}

// Dense symmetric solve by Gaussian elimination with partial pivoting; the
// oracle for conjugate-gradient results.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
    x[i] = acc / a[i][i];
  }
  return x;
}

// Explicit (F + damping I) assembled from the per-state closed forms: the
// mean block is J^T diag(1/sigma^2) J averaged over states with J built
// column-by-column from finite differences of the mean head; the log_std
// block is the constant diagonal 2.
inline std::vector<std::vector<double>> dense_fisher(
    const kpg::GaussianPolicy& policy,
    const std::vector<std::vector<double>>& states, double damping) {
  const std::size_t n = policy.param_count();
  const std::size_t net_n = policy.mean_net.param_count();
  const std::size_t dim = policy.action_dim();
  std::vector<std::vector<double>> f(n, std::vector<double>(n, 0.0));

  std::vector<double> inv_var(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    inv_var[i] = std::exp(-2.0 * policy.log_std[i]);
  }

  const double h = 1e-6;
  for (const auto& state : states) {
    // Jacobian of the mean with respect to net params, one column at a time.
    std::vector<std::vector<double>> jac(dim, std::vector<double>(net_n));
    kpg::MlpState net = policy.mean_net;
    kpg::ParamVector params = net.flatten();
    for (std::size_t j = 0; j < net_n; ++j) {
      const double saved = params[j];
      params[j] = saved + h;
      net.unflatten(params);
      const auto up = kpg::mlp_forward(net, state);
      params[j] = saved - h;
      net.unflatten(params);
      const auto down = kpg::mlp_forward(net, state);
      params[j] = saved;
      for (std::size_t i = 0; i < dim; ++i) {
        jac[i][j] = (up[i] - down[i]) / (2.0 * h);
      }
    }
    for (std::size_t r = 0; r < net_n; ++r) {
      for (std::size_t c = 0; c < net_n; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
          acc += jac[i][r] * inv_var[i] * jac[i][c];
        }
        f[r][c] += acc;
      }
    }
  }
  const double inv_s = 1.0 / static_cast<double>(states.size());
  for (std::size_t r = 0; r < net_n; ++r) {
    for (std::size_t c = 0; c < net_n; ++c) f[r][c] *= inv_s;
  }
  for (std::size_t i = 0; i < dim; ++i) f[net_n + i][net_n + i] = 2.0;
  for (std::size_t i = 0; i < n; ++i) f[i][i] += damping;
  return f;
}

}  // namespace testutil

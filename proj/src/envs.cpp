#include "kpg/envs.hpp"

#include <algorithm>
#include <cmath>

#include "kpg/errors.hpp"

namespace kpg {

namespace {

double clip(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

void check_dims(const EnvSpec& spec, std::size_t state_dim,
                std::size_t action_dim, const char* env_name) {
  if (state_dim != spec.obs_dim) {
    throw ShapeError(std::string(env_name) + ": state has wrong dimension");
  }
  if (action_dim != spec.action_dim) {
    throw ShapeError(std::string(env_name) + ": action has wrong dimension");
  }
}

}  // namespace

PointMass2D::PointMass2D(std::size_t horizon, double reset_noise)
    : reset_noise_(reset_noise) {
  if (horizon == 0) throw ContractError("PointMass2D: horizon must be >= 1");
  if (!(reset_noise >= 0.0)) {
    throw ContractError("PointMass2D: reset noise must be >= 0");
  }
  spec_.obs_dim = 4;
  spec_.action_dim = 2;
  spec_.action_low = {-1.0, -1.0};
  spec_.action_high = {1.0, 1.0};
  spec_.max_horizon = horizon;
}

std::vector<double> PointMass2D::reset(Rng& rng) const {
  std::vector<double> state(4);
  for (double& v : state) v = reset_noise_ * rng.normal();
  return state;
}

StepResult PointMass2D::step(std::span<const double> state,
                             std::span<const double> action) const {
  check_dims(spec_, state.size(), action.size(), "PointMass2D");
  for (double v : state) {
    if (!std::isfinite(v)) {
      throw ContractError("PointMass2D: non-finite state");
    }
  }
  const double ax = clip(action[0], -1.0, 1.0);
  const double ay = clip(action[1], -1.0, 1.0);
  const double vx = state[2] + kDt * ax;
  const double vy = state[3] + kDt * ay;
  const double px = state[0] + kDt * vx;
  const double py = state[1] + kDt * vy;
  StepResult out;
  out.next_state = {px, py, vx, vy};
  out.reward = vx - kControlCost * (ax * ax + ay * ay) + kAliveBonus;
  out.done = std::abs(py) > 1.0;
  return out;
}

Lqr1D::Lqr1D(std::size_t horizon) {
  if (horizon == 0) throw ContractError("Lqr1D: horizon must be >= 1");
  spec_.obs_dim = 1;
  spec_.action_dim = 1;
  spec_.action_low = {-kActionLimit};
  spec_.action_high = {kActionLimit};
  spec_.max_horizon = horizon;
}

std::vector<double> Lqr1D::reset(Rng& rng) const {
  return {rng.uniform(-1.0, 1.0)};
}

StepResult Lqr1D::step(std::span<const double> state,
                       std::span<const double> action) const {
  check_dims(spec_, state.size(), action.size(), "Lqr1D");
  const double s = state[0];
  const double a = clip(action[0], -kActionLimit, kActionLimit);
  StepResult out;
  out.next_state = {s + a};
  out.reward = -(s * s + kActionCost * a * a);
  out.done = false;
  return out;
}

double lqr_value_oracle(double gain, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ContractError("lqr_value_oracle: gamma must be in [0, 1]");
  }
  const double closed_loop = 1.0 - gain;
  const double contraction = gamma * closed_loop * closed_loop;
  if (!(contraction < 1.0)) {
    throw ContractError(
        "lqr_value_oracle: feedback gain is unstable for this discount");
  }
  return -(1.0 + Lqr1D::kActionCost * gain * gain) / (1.0 - contraction);
}

std::unique_ptr<Env> make_env(const std::string& name, std::size_t horizon) {
  if (name == "pointmass2d") return std::make_unique<PointMass2D>(horizon);
  if (name == "lqr1d") return std::make_unique<Lqr1D>(horizon);
  throw ContractError("make_env: unknown environment \"" + name + "\"");
}

}  // namespace kpg

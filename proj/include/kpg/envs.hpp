#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kpg/rng.hpp"

namespace kpg {

struct EnvSpec {
  std::size_t obs_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> action_low;
  std::vector<double> action_high;
  std::size_t max_horizon = 0;
};

struct StepResult {
  std::vector<double> next_state;
  double reward = 0.0;
  bool done = false;
};

// Environments are stateless: step is a pure function of (state, action) plus
// the caller's RNG at reset. That keeps rollouts trivially parallel and
// reproducible.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::vector<double> reset(Rng& rng) const = 0;
  virtual StepResult step(std::span<const double> state,
                          std::span<const double> action) const = 0;
};

// Point mass on a 2D plane, driven by clipped accelerations. Observation is
// (px, py, vx, vy). Reward is forward velocity minus a small control cost
// plus an alive bonus; the episode ends when the mass strays off the track
// (|py| > 1).
class PointMass2D final : public Env {
 public:
  explicit PointMass2D(std::size_t horizon, double reset_noise = 0.01);

  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset(Rng& rng) const override;
  StepResult step(std::span<const double> state,
                  std::span<const double> action) const override;

  static constexpr double kDt = 0.05;
  static constexpr double kControlCost = 0.005;
  static constexpr double kAliveBonus = 1.0;

 private:
  EnvSpec spec_;
  double reset_noise_;
};

// Scalar linear-quadratic regulator: s' = s + a with the action clipped to
// [-4, 4], reward -(s^2 + 0.1 a^2), uniform resets on [-1, 1], never done
// before the horizon. Linear feedback a = -g s has a closed-form value, which
// makes this the analytically checkable environment.
class Lqr1D final : public Env {
 public:
  explicit Lqr1D(std::size_t horizon);

  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset(Rng& rng) const override;
  StepResult step(std::span<const double> state,
                  std::span<const double> action) const override;

  static constexpr double kActionCost = 0.1;
  static constexpr double kActionLimit = 4.0;

 private:
  EnvSpec spec_;
};

// Expected discounted return of the linear feedback policy a = -gain * s on
// Lqr1D from a unit-variance start state scale: per unit s^2, the value is
// -(1 + 0.1 gain^2) / (1 - gamma (1 - gain)^2). Throws if the closed loop is
// unstable for the given discount.
double lqr_value_oracle(double gain, double gamma);

// Names: "pointmass2d", "lqr1d".
std::unique_ptr<Env> make_env(const std::string& name, std::size_t horizon);

}  // namespace kpg

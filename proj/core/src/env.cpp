#include "sensor/env.hpp"

#include <algorithm>
#include <cmath>

#include "sensor/errors.hpp"

namespace sensor {

std::array<double, 4> concat_action(double motor, const std::array<double, 3>& sensor_part) {
  return {motor, sensor_part[0], sensor_part[1], sensor_part[2]};
}

EnvAction split_action(const std::array<double, 4>& flat) {
  return {flat[0], {flat[1], flat[2], flat[3]}};
}

double wrap_angle(double theta) {
  double w = std::atan2(std::sin(theta), std::cos(theta));
  if (w <= -3.141592653589793) w = 3.141592653589793;
  return w;
}

MotorState motor_substep(const MotorState& s, double torque_action) {
  const double u = std::clamp(torque_action, -1.0, 1.0) * kTorqueScale;
  const double accel = (kGravity / kLength) * std::sin(s.theta) + u / (kMass * kLength * kLength);
  MotorState next;
  next.theta_dot = std::clamp(s.theta_dot + kDt * accel, -kMaxSpeed, kMaxSpeed);
  next.theta = wrap_angle(s.theta + kDt * next.theta_dot);
  return next;
}

double mechanical_energy(const MotorState& s) {
  return 0.5 * kMass * kLength * kLength * s.theta_dot * s.theta_dot +
         kMass * kGravity * kLength * std::cos(s.theta);
}

PendulumEnv::PendulumEnv(const EnvConfig& config) : config_(config) {
  if (config_.action_repeat < 1) throw ConfigError("env: action_repeat must be >= 1");
  if (config_.episode_len < 1) throw ConfigError("env: episode_len must be >= 1");
  if (config_.resolution < 8) throw ConfigError("env: resolution must be >= 8");
  if (!config_.expert_viewpoint.valid() || !config_.agent_init_viewpoint.valid()) {
    throw ConfigError("env: viewpoint outside sensor state ranges");
  }
}

Image PendulumEnv::reset(std::uint64_t seed) {
  Rng rng(seed);
  const double mag = rng.uniform(3.141592653589793 - 0.1, 3.141592653589793);
  motor_.theta = rng.uniform() < 0.5 ? mag : -mag;
  motor_.theta_dot = rng.uniform(-0.5, 0.5);
  sensor_ = config_.agent_init_viewpoint;
  step_count_ = 0;
  active_ = true;
  return observe();
}

PendulumEnv::StepResult PendulumEnv::step(const EnvAction& action) {
  if (!active_) throw FatalError("env: step() before reset()");
  if (done()) throw FatalError("env: step() after episode end");

  double reward_acc = 0.0;
  for (int i = 0; i < config_.action_repeat; ++i) {
    motor_ = motor_substep(motor_, action.motor);
    reward_acc += 0.5 * (1.0 + std::cos(motor_.theta));
  }

  if (config_.sensor_enabled) {
    SensorState moved = sensor_;
    moved.d += std::clamp(action.sensor[0], -1.0, 1.0) * kSensorStepScale[0];
    moved.a += std::clamp(action.sensor[1], -1.0, 1.0) * kSensorStepScale[1];
    moved.e += std::clamp(action.sensor[2], -1.0, 1.0) * kSensorStepScale[2];
    sensor_ = moved.clamped();
  }

  ++step_count_;
  StepResult out;
  out.done = done();
  out.true_reward = reward_acc / config_.action_repeat;
  out.obs = observe();
  return out;
}

Image PendulumEnv::observe() const {
  return render(pendulum_scene(motor_.theta, config_.lookat), sensor_, config_.resolution);
}

}  // namespace sensor

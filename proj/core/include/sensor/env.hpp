#pragma once

#include <array>
#include <cstdint>

#include "sensor/render.hpp"
#include "sensor/rng.hpp"

namespace sensor {

/// Pendulum pose: angle from upright wrapped to (-pi, pi], angular velocity
/// clamped to [-8, 8] rad/s.
struct MotorState {
  double theta = 0.0;
  double theta_dot = 0.0;
};

/// One agent action: motor torque command in [-1, 1] plus a camera increment
/// in [-1, 1]^3.
struct EnvAction {
  double motor = 0.0;
  std::array<double, 3> sensor{0.0, 0.0, 0.0};
};

std::array<double, 4> concat_action(double motor, const std::array<double, 3>& sensor_part);
EnvAction split_action(const std::array<double, 4>& flat);

struct EnvConfig {
  SensorState expert_viewpoint{3.0, 90.0, -45.0};
  SensorState agent_init_viewpoint{3.0, 90.0, -45.0};
  int action_repeat = 2;
  int episode_len = 100;  // agent steps per episode
  int resolution = 32;
  bool sensor_enabled = true;
  Lookat lookat = Lookat::pivot;
};

// Pendulum physics constants (semi-implicit Euler).
inline constexpr double kDt = 0.05;
inline constexpr double kGravity = 10.0;
inline constexpr double kMass = 1.0;
inline constexpr double kLength = 1.0;
inline constexpr double kTorqueScale = 2.0;
inline constexpr double kMaxSpeed = 8.0;

// Per-dimension camera increments for a full-scale sensor action.
inline constexpr std::array<double, 3> kSensorStepScale{0.5, 6.0, 3.0};

double wrap_angle(double theta);
MotorState motor_substep(const MotorState& s, double torque_action);
double mechanical_energy(const MotorState& s);

/// Active-vision pendulum POMDP. Motor dynamics advance `action_repeat`
/// substeps per step(); the camera moves once per step() by
/// clamp(c + a_sensor * step_scale). The true reward (mean tip height per
/// substep) is exposed for expert scripting and evaluation only.
class PendulumEnv {
 public:
  explicit PendulumEnv(const EnvConfig& config);

  Image reset(std::uint64_t seed);

  struct StepResult {
    Image obs;
    bool done = false;
    double true_reward = 0.0;
  };
  /// Throws FatalError if called after the episode finished.
  StepResult step(const EnvAction& action);

  const EnvConfig& config() const { return config_; }
  const MotorState& motor_state() const { return motor_; }
  const SensorState& sensor_state() const { return sensor_; }
  int steps_taken() const { return step_count_; }
  bool done() const { return step_count_ >= config_.episode_len; }

  Image observe() const;

 private:
  EnvConfig config_;
  MotorState motor_;
  SensorState sensor_;
  int step_count_ = 0;
  bool active_ = false;
};

}  // namespace sensor

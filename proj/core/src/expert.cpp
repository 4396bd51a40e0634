#include "sensor/expert.hpp"

#include <algorithm>
#include <cmath>

#include "sensor/errors.hpp"

namespace sensor {

double expert_motor_action(const MotorState& s) {
  if (std::abs(s.theta) < kExpertSwitchAngle) {
    return std::clamp(-kExpertKp * s.theta - kExpertKd * s.theta_dot, -1.0, 1.0);
  }
  const double target = kMass * kGravity * kLength;  // upright rest energy
  const double de = target - mechanical_energy(s);
  const double dir = s.theta_dot > 0.0 ? 1.0 : (s.theta_dot < 0.0 ? -1.0 : 1.0);
  return std::clamp(kExpertEnergyGain * de * dir, -1.0, 1.0);
}

EpisodeRecord scripted_expert(PendulumEnv& env, std::uint64_t seed) {
  EpisodeRecord ep;
  ep.resolution = env.config().resolution;
  Image obs = env.reset(seed);
  ep.observations.push_back(std::move(obs.pixels));

  std::vector<double> rewards;
  while (!env.done()) {
    EnvAction a;
    a.motor = expert_motor_action(env.motor_state());
    auto res = env.step(a);
    rewards.push_back(res.true_reward);
    ep.observations.push_back(std::move(res.obs.pixels));
    ep.actions.push_back({static_cast<float>(a.motor), 0.0f, 0.0f, 0.0f});
    ep.true_return += res.true_reward;
  }

  double tail = 0.0;
  const std::size_t half = rewards.size() / 2;
  for (std::size_t i = half; i < rewards.size(); ++i) tail += rewards[i];
  tail /= static_cast<double>(rewards.size() - half);
  if (tail < kExpertReturnFloor) {
    throw FatalError("expert: controller stabilized at mean step reward " + std::to_string(tail) +
                     " < " + std::to_string(kExpertReturnFloor) + " (seed " + std::to_string(seed) + ")");
  }
  return ep;
}

std::vector<EpisodeRecord> generate_expert_demos(const EnvConfig& config, int episodes,
                                                 std::uint64_t seed) {
  EnvConfig expert_cfg = config;
  expert_cfg.agent_init_viewpoint = config.expert_viewpoint;
  expert_cfg.sensor_enabled = false;
  PendulumEnv env(expert_cfg);
  std::vector<EpisodeRecord> out;
  out.reserve(static_cast<std::size_t>(episodes));
  for (int i = 0; i < episodes; ++i) out.push_back(scripted_expert(env, seed + static_cast<std::uint64_t>(i)));
  return out;
}

}  // namespace sensor

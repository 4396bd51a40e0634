#pragma once

#include "sensor/episode.hpp"

namespace sensor {

// Scripted swing-up controller: energy shaping toward the upright energy
// (k_e = 1.5), switching to PD stabilization (k_p = 8, k_d = 2) inside
// |theta| < 0.4. Sensor actions are always zero.
inline constexpr double kExpertEnergyGain = 1.5;
inline constexpr double kExpertKp = 8.0;
inline constexpr double kExpertKd = 2.0;
inline constexpr double kExpertSwitchAngle = 0.4;
inline constexpr double kExpertReturnFloor = 0.85;  // mean step reward, final half

/// Pure control law, exposed for testing.
double expert_motor_action(const MotorState& s);

/// Rolls one episode with the scripted controller. The env must be at the
/// expert configuration (camera on the expert viewpoint, sensor moves are
/// zero anyway). Throws FatalError if the final-half mean step reward falls
/// below the 0.85 floor.
EpisodeRecord scripted_expert(PendulumEnv& env, std::uint64_t seed);

/// Standard demo set: `episodes` rollouts seeded seed, seed+1, ...
std::vector<EpisodeRecord> generate_expert_demos(const EnvConfig& config, int episodes,
                                                 std::uint64_t seed);

}  // namespace sensor

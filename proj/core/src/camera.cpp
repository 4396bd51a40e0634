#include "sensor/camera.hpp"

#include <algorithm>
#include <cmath>

namespace sensor {

namespace {
constexpr double kDegToRad = 0.017453292519943295;
}

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  return {a.x / n, a.y / n, a.z / n};
}

SensorState SensorState::clamped() const {
  return {std::clamp(d, kDistMin, kDistMax), std::clamp(a, kAzimMin, kAzimMax),
          std::clamp(e, kElevMin, kElevMax)};
}

bool SensorState::valid() const {
  return d >= kDistMin && d <= kDistMax && a >= kAzimMin && a <= kAzimMax && e >= kElevMin &&
         e <= kElevMax;
}

CameraPose camera_pose(const SensorState& c, const Vec3& look_at) {
  const double ar = c.a * kDegToRad;
  const double er = c.e * kDegToRad;
  CameraPose pose;
  pose.position =
      look_at + Vec3{std::cos(er) * std::cos(ar), std::cos(er) * std::sin(ar), -std::sin(er)} * c.d;
  pose.forward = normalized(look_at - pose.position);
  const Vec3 world_up{0.0, 0.0, 1.0};
  Vec3 side = cross(pose.forward, world_up);
  if (norm(side) < 1e-12) {
    // looking straight down; limit of the construction as e -> -90
    side = {-std::sin(ar), std::cos(ar), 0.0};
  }
  pose.right = normalized(side);
  pose.up = cross(pose.right, pose.forward);
  return pose;
}

}  // namespace sensor

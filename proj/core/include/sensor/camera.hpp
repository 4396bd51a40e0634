#pragma once

#include <array>

namespace sensor {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double k) const { return {x * k, y * k, z * k}; }
};

double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);
Vec3 normalized(const Vec3& a);

/// Camera parameters: distance to the look-at point (scene units), azimuth
/// and elevation (degrees). Valid ranges: d in [0.5, 10], a in [0, 180],
/// e in [-90, 0].
struct SensorState {
  double d = 3.0;
  double a = 90.0;
  double e = -45.0;

  static constexpr double kDistMin = 0.5, kDistMax = 10.0;
  static constexpr double kAzimMin = 0.0, kAzimMax = 180.0;
  static constexpr double kElevMin = -90.0, kElevMax = 0.0;

  SensorState clamped() const;
  bool valid() const;
};

/// Orthonormal camera frame: right/up/forward plus position. forward points
/// from the camera toward the look-at point.
struct CameraPose {
  Vec3 position;
  Vec3 right, up, forward;
};

/// Spherical placement around look_at with world-up (0,0,1):
/// position = look_at + d * (cos e cos a, cos e sin a, -sin e), angles in
/// degrees. At e = -90 (straight overhead) the frame uses the continuous
/// azimuth-dependent limit of the look-at construction.
CameraPose camera_pose(const SensorState& c, const Vec3& look_at);

}  // namespace sensor

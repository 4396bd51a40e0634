#pragma once

#include <string>
#include <vector>

#include "sensor/camera.hpp"

namespace sensor {

/// Square grayscale frame; pixels are row-major floats in [0, 1]. Pixels are
/// kept in single precision so on-disk frames round-trip bit-exactly.
struct Image {
  int width = 0, height = 0;
  std::vector<float> pixels;

  float at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

/// Three-primitive scene: spheres and thick line segments over an infinite
/// ground plane, each painted at a fixed intensity.
struct SceneDescription {
  struct Sphere {
    Vec3 center;
    double radius;
    float intensity;
  };
  struct Segment {
    Vec3 a, b;
    double radius;
    float intensity;
  };

  std::vector<Sphere> spheres;
  std::vector<Segment> segments;
  double ground_plane_z = -1.3;
  float ground_intensity = 0.25f;
  Vec3 look_at;  // camera target
};

enum class Lookat { pivot, bob };

// Scene intensities and geometry for the single-link pendulum. theta is the
// angle from upright; the rod swings in the world x-z plane around the origin.
inline constexpr float kBackgroundIntensity = 0.0f;
inline constexpr float kGroundIntensity = 0.25f;
inline constexpr float kRodIntensity = 0.6f;
inline constexpr float kPivotIntensity = 0.8f;
inline constexpr float kBobIntensity = 1.0f;
inline constexpr double kPendulumLength = 1.0;
inline constexpr double kBobRadius = 0.2;
inline constexpr double kPivotRadius = 0.09;
inline constexpr double kRodRadius = 0.05;

Vec3 pendulum_bob_position(double theta);
SceneDescription pendulum_scene(double theta, Lookat lookat = Lookat::pivot);

/// Pinhole perspective render (vertical FOV 60 degrees, near plane 0.05).
/// Painter's order: ground first, then primitives far to near by center
/// depth. Deterministic: identical inputs give bit-identical images.
Image render(const SceneDescription& scene, const SensorState& c, int resolution);

/// Binary PGM (P5), 8-bit.
void write_pgm(const std::string& path, const Image& img);

}  // namespace sensor

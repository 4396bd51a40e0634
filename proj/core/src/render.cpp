#include "sensor/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sensor/errors.hpp"

namespace sensor {

namespace {

constexpr double kNearPlane = 0.05;
constexpr double kVfovDeg = 60.0;

struct CamPoint {
  double x, y, z;  // right/up/forward components relative to the camera
};

CamPoint to_cam(const CameraPose& pose, const Vec3& p) {
  const Vec3 r = p - pose.position;
  return {dot(r, pose.right), dot(r, pose.up), dot(r, pose.forward)};
}

struct Prim {
  double depth;       // painter key: camera-space depth of the primitive center
  int index;          // tie-break for a stable order
  const SceneDescription::Sphere* sphere = nullptr;
  const SceneDescription::Segment* segment = nullptr;
};

void fill_disc(Image& img, double pcx, double pcy, double r_px, float intensity) {
  const int lo_r = std::max(0, static_cast<int>(std::floor(pcy - r_px - 1.0)));
  const int hi_r = std::min(img.height - 1, static_cast<int>(std::ceil(pcy + r_px + 1.0)));
  const int lo_c = std::max(0, static_cast<int>(std::floor(pcx - r_px - 1.0)));
  const int hi_c = std::min(img.width - 1, static_cast<int>(std::ceil(pcx + r_px + 1.0)));
  const double r2 = r_px * r_px;
  for (int i = lo_r; i <= hi_r; ++i) {
    const double dy = (i + 0.5) - pcy;
    for (int j = lo_c; j <= hi_c; ++j) {
      const double dx = (j + 0.5) - pcx;
      if (dx * dx + dy * dy <= r2) {
        img.pixels[static_cast<std::size_t>(i) * img.width + j] = intensity;
      }
    }
  }
}

}  // namespace

Vec3 pendulum_bob_position(double theta) {
  return {kPendulumLength * std::sin(theta), 0.0, kPendulumLength * std::cos(theta)};
}

SceneDescription pendulum_scene(double theta, Lookat lookat) {
  SceneDescription scene;
  const Vec3 bob = pendulum_bob_position(theta);
  scene.segments.push_back({{0.0, 0.0, 0.0}, bob, kRodRadius, kRodIntensity});
  scene.spheres.push_back({{0.0, 0.0, 0.0}, kPivotRadius, kPivotIntensity});
  scene.spheres.push_back({bob, kBobRadius, kBobIntensity});
  scene.ground_plane_z = -1.3;
  scene.ground_intensity = kGroundIntensity;
  scene.look_at = (lookat == Lookat::pivot) ? Vec3{0.0, 0.0, 0.0} : bob;
  return scene;
}

Image render(const SceneDescription& scene, const SensorState& c, int resolution) {
  if (resolution < 8) throw ConfigError("render: resolution must be >= 8");
  if (!c.valid()) throw ConfigError("render: sensor state out of range");
  for (const auto& s : scene.spheres) {
    if (s.radius <= 0.0) throw ConfigError("render: sphere radius must be positive");
  }
  for (const auto& s : scene.segments) {
    if (s.radius <= 0.0) throw ConfigError("render: segment radius must be positive");
  }

  Image img;
  img.width = img.height = resolution;
  img.pixels.assign(static_cast<std::size_t>(resolution) * resolution, kBackgroundIntensity);

  const CameraPose pose = camera_pose(c, scene.look_at);
  const double half = resolution / 2.0;
  const double fpx = half / std::tan(kVfovDeg * 0.5 * 0.017453292519943295);

  // ground plane (background layer)
  for (int i = 0; i < resolution; ++i) {
    const double vy = (half - (i + 0.5)) / fpx;
    for (int j = 0; j < resolution; ++j) {
      const double vx = ((j + 0.5) - half) / fpx;
      const Vec3 dir = pose.forward + pose.right * vx + pose.up * vy;  // depth-1 ray
      if (std::abs(dir.z) < 1e-12) continue;
      const double t = (scene.ground_plane_z - pose.position.z) / dir.z;
      if (t > kNearPlane) {
        img.pixels[static_cast<std::size_t>(i) * resolution + j] = scene.ground_intensity;
      }
    }
  }

  std::vector<Prim> prims;
  for (std::size_t k = 0; k < scene.spheres.size(); ++k) {
    const auto cp = to_cam(pose, scene.spheres[k].center);
    prims.push_back({cp.z, static_cast<int>(prims.size()), &scene.spheres[k], nullptr});
  }
  for (std::size_t k = 0; k < scene.segments.size(); ++k) {
    const auto pa = to_cam(pose, scene.segments[k].a);
    const auto pb = to_cam(pose, scene.segments[k].b);
    prims.push_back({0.5 * (pa.z + pb.z), static_cast<int>(prims.size()), nullptr, &scene.segments[k]});
  }
  std::sort(prims.begin(), prims.end(), [](const Prim& a, const Prim& b) {
    if (a.depth != b.depth) return a.depth > b.depth;  // far first
    return a.index < b.index;
  });

  for (const auto& prim : prims) {
    if (prim.sphere) {
      const auto cp = to_cam(pose, prim.sphere->center);
      if (cp.z <= kNearPlane) continue;
      const double pcx = half + fpx * cp.x / cp.z;
      const double pcy = half - fpx * cp.y / cp.z;
      fill_disc(img, pcx, pcy, fpx * prim.sphere->radius / cp.z, prim.sphere->intensity);
      continue;
    }
    CamPoint pa = to_cam(pose, prim.segment->a);
    CamPoint pb = to_cam(pose, prim.segment->b);
    if (pa.z <= kNearPlane && pb.z <= kNearPlane) continue;
    if (pa.z <= kNearPlane || pb.z <= kNearPlane) {
      // clip the behind-camera end at the near plane
      const double u = (kNearPlane + 1e-9 - pa.z) / (pb.z - pa.z);
      CamPoint cut{pa.x + u * (pb.x - pa.x), pa.y + u * (pb.y - pa.y), kNearPlane + 1e-9};
      if (pa.z <= kNearPlane) {
        pa = cut;
      } else {
        pb = cut;
      }
    }
    const double ax = half + fpx * pa.x / pa.z, ay = half - fpx * pa.y / pa.z;
    const double bx = half + fpx * pb.x / pb.z, by = half - fpx * pb.y / pb.z;
    const double max_r = fpx * prim.segment->radius / std::min(pa.z, pb.z);
    const int lo_r = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - max_r - 1.0)));
    const int hi_r = std::min(resolution - 1, static_cast<int>(std::ceil(std::max(ay, by) + max_r + 1.0)));
    const int lo_c = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - max_r - 1.0)));
    const int hi_c = std::min(resolution - 1, static_cast<int>(std::ceil(std::max(ax, bx) + max_r + 1.0)));
    const double segx = bx - ax, segy = by - ay;
    const double seg_len2 = segx * segx + segy * segy;
    for (int i = lo_r; i <= hi_r; ++i) {
      const double py = i + 0.5;
      for (int j = lo_c; j <= hi_c; ++j) {
        const double px = j + 0.5;
        double u = 0.0;
        if (seg_len2 > 0.0) {
          u = std::clamp(((px - ax) * segx + (py - ay) * segy) / seg_len2, 0.0, 1.0);
        }
        const double qx = ax + u * segx, qy = ay + u * segy;
        const double zq = pa.z + u * (pb.z - pa.z);
        const double r_px = fpx * prim.segment->radius / zq;
        const double dx = px - qx, dy = py - qy;
        if (dx * dx + dy * dy <= r_px * r_px) {
          img.pixels[static_cast<std::size_t>(i) * resolution + j] = prim.segment->intensity;
        }
      }
    }
  }
  return img;
}

void write_pgm(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FatalError("pgm: cannot write " + path);
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  for (float p : img.pixels) {
    const int v = std::clamp(static_cast<int>(std::lround(p * 255.0f)), 0, 255);
    os.put(static_cast<char>(v));
  }
  if (!os) throw FatalError("pgm: write failed for " + path);
}

}  // namespace sensor

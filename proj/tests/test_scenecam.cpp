#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sensor/errors.hpp"
#include "sensor/render.hpp"
#include "sensor/rng.hpp"

using namespace sensor;

namespace {

constexpr double kPi = 3.141592653589793;

SensorState random_state(Rng& rng) {
  return {rng.uniform(0.5, 10.0), rng.uniform(0.0, 180.0), rng.uniform(-90.0, 0.0)};
}

// independent spherical-coordinate computation for the oracle
Vec3 spherical_oracle(const SensorState& c, const Vec3& look_at) {
  const double a = c.a * kPi / 180.0;
  const double e = c.e * kPi / 180.0;
  const double horiz = c.d * std::cos(e);
  return {look_at.x + horiz * std::cos(a), look_at.y + horiz * std::sin(a),
          look_at.z - c.d * std::sin(e)};
}

int count_at_least(const Image& img, float intensity) {
  int n = 0;
  for (float p : img.pixels) {
    if (p >= intensity) ++n;
  }
  return n;
}

bool equals_hflip(const Image& x, const Image& y) {
  if (x.width != y.width || x.height != y.height) return false;
  for (int i = 0; i < x.height; ++i) {
    for (int j = 0; j < x.width; ++j) {
      if (x.at(i, j) != y.at(i, x.width - 1 - j)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("camera_pose placement examples") {
  auto p1 = camera_pose({3.0, 90.0, 0.0}, {0, 0, 0});
  CHECK(p1.position.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p1.position.y == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(p1.position.z == doctest::Approx(0.0).epsilon(1e-12));

  auto p2 = camera_pose({3.0, 90.0, -45.0}, {0, 0, 0});
  CHECK(p2.position.x == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(p2.position.y == doctest::Approx(2.1213203435596424).epsilon(1e-9));
  CHECK(p2.position.z == doctest::Approx(2.1213203435596424).epsilon(1e-9));

  auto p3 = camera_pose({5.0, 0.0, -90.0}, {0, 0, 0});
  CHECK(p3.position.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p3.position.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p3.position.z == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("camera_pose matches the spherical oracle and distance contract") {
  Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    const SensorState c = random_state(rng);
    const Vec3 look_at{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const auto pose = camera_pose(c, look_at);
    const Vec3 expect = spherical_oracle(c, look_at);
    CHECK(std::abs(pose.position.x - expect.x) < 1e-9);
    CHECK(std::abs(pose.position.y - expect.y) < 1e-9);
    CHECK(std::abs(pose.position.z - expect.z) < 1e-9);
    CHECK(std::abs(norm(pose.position - look_at) - c.d) < 1e-9);
  }
}

TEST_CASE("camera frame is orthonormal, including straight overhead") {
  Rng rng(43);
  std::vector<SensorState> states;
  for (int i = 0; i < 100; ++i) states.push_back(random_state(rng));
  states.push_back({3.0, 25.0, -90.0});
  states.push_back({5.0, 180.0, -90.0});
  for (const auto& c : states) {
    const auto pose = camera_pose(c, {0, 0, 0});
    CHECK(std::abs(norm(pose.right) - 1.0) < 1e-9);
    CHECK(std::abs(norm(pose.up) - 1.0) < 1e-9);
    CHECK(std::abs(norm(pose.forward) - 1.0) < 1e-9);
    CHECK(std::abs(dot(pose.right, pose.up)) < 1e-9);
    CHECK(std::abs(dot(pose.right, pose.forward)) < 1e-9);
    CHECK(std::abs(dot(pose.up, pose.forward)) < 1e-9);
  }
}

TEST_CASE("sensor state clamping") {
  SensorState wild{-3.0, 270.0, 40.0};
  const auto c = wild.clamped();
  CHECK(c.d == 0.5);
  CHECK(c.a == 180.0);
  CHECK(c.e == 0.0);
  CHECK(c.valid());
  CHECK_FALSE(wild.valid());
}

TEST_CASE("render determinism") {
  const auto scene = pendulum_scene(0.7);
  const SensorState c{3.0, 90.0, -45.0};
  Image a = render(scene, c, 32);
  Image b = render(scene, c, 32);
  CHECK(a.pixels == b.pixels);
  for (float p : a.pixels) {
    CHECK(p >= 0.0f);
    CHECK(p <= 1.0f);
  }
}

TEST_CASE("sphere at the look-at point projects onto the image center") {
  Rng rng(47);
  for (int res : {16, 32}) {
    for (int i = 0; i < 40; ++i) {
      const SensorState c = random_state(rng);
      SceneDescription scene;
      scene.look_at = {0, 0, 0};
      scene.ground_plane_z = -50.0;  // far below, keeps the disc isolated
      // radius large enough that the disc covers pixels even at d = 10
      scene.spheres.push_back({{0, 0, 0}, 1.0, 1.0f});
      Image img = render(scene, c, res);
      double ci = 0.0, cj = 0.0;
      int n = 0;
      for (int r = 0; r < res; ++r) {
        for (int col = 0; col < res; ++col) {
          if (img.at(r, col) == 1.0f) {
            ci += r + 0.5;
            cj += col + 0.5;
            ++n;
          }
        }
      }
      REQUIRE(n > 0);
      CHECK(std::abs(ci / n - res / 2.0) <= 1.0);
      CHECK(std::abs(cj / n - res / 2.0) <= 1.0);
    }
  }
}

TEST_CASE("apparent bob size shrinks with distance") {
  const auto scene = pendulum_scene(2.6);
  const int near_count = count_at_least(render(scene, {2.0, 90.0, -45.0}, 32), kBobIntensity);
  const int far_count = count_at_least(render(scene, {6.0, 90.0, -45.0}, 32), kBobIntensity);
  CHECK(near_count > far_count);

  // non-increasing up to rasterization jitter: once discs shrink to a few
  // pixels, moving their subpixel center can flip one or two boundary pixels
  for (int res : {16, 32}) {
    int prev = 1 << 30;
    int first = -1, last = 0;
    for (double d = 1.0; d <= 9.5; d += 0.5) {
      const int n = count_at_least(render(scene, {d, 90.0, -45.0}, res), kBobIntensity);
      if (first < 0) first = n;
      last = n;
      CHECK(n <= prev + 2);
      prev = n;
    }
    CHECK(first > last);
  }
}

TEST_CASE("azimuth mirror symmetry") {
  // the x -> -x world reflection swaps the two cameras and maps the scene at
  // theta onto the scene at -theta; at theta in {0, pi} the scene is its own
  // mirror image and the single-state form holds exactly
  for (int res : {16, 32}) {
    for (double theta : {0.0, kPi}) {
      for (double delta : {10.0, 30.0, 55.0, 90.0}) {
        for (double e : {-10.0, -45.0, -80.0}) {
          Image left = render(pendulum_scene(theta), {3.0, 90.0 + delta, e}, res);
          Image right = render(pendulum_scene(theta), {3.0, 90.0 - delta, e}, res);
          CHECK(equals_hflip(left, right));
        }
      }
    }
  }

  Rng rng(53);
  for (int res : {16, 32}) {
    for (int i = 0; i < 25; ++i) {
      const double theta = rng.uniform(-kPi, kPi);
      const double delta = rng.uniform(0.0, 90.0);
      const double d = rng.uniform(1.5, 8.0);
      const double e = rng.uniform(-80.0, -5.0);
      Image left = render(pendulum_scene(theta), {d, 90.0 + delta, e}, res);
      Image right = render(pendulum_scene(-theta), {d, 90.0 - delta, e}, res);
      CHECK(equals_hflip(left, right));
    }
  }
}

TEST_CASE("geometry behind the camera is culled") {
  SceneDescription scene;
  scene.look_at = {0, 0, 0};
  scene.ground_plane_z = -50.0;
  scene.spheres.push_back({{0, 30.0, 0}, 0.5, 1.0f});  // behind a camera at a=90
  scene.segments.push_back({{0, 25.0, 0}, {0, 35.0, 0}, 0.2, 0.6f});
  Image img = render(scene, {3.0, 90.0, 0.0}, 32);
  CHECK(count_at_least(img, 0.5f) == 0);
}

TEST_CASE("renderer rejects bad inputs") {
  CHECK_THROWS_AS(render(pendulum_scene(0.0), {3.0, 90.0, -45.0}, 4), ConfigError);
  CHECK_THROWS_AS(render(pendulum_scene(0.0), {0.1, 90.0, -45.0}, 32), ConfigError);
  SceneDescription scene = pendulum_scene(0.0);
  scene.spheres[0].radius = 0.0;
  CHECK_THROWS_AS(render(scene, {3.0, 90.0, -45.0}, 32), ConfigError);
}

TEST_CASE("pgm output") {
  const auto dir = std::filesystem::temp_directory_path() / "snsr_pgm_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "frame.pgm").string();
  write_pgm(path, render(pendulum_scene(0.4), {3.0, 90.0, -45.0}, 32));
  std::ifstream is(path, std::ios::binary);
  REQUIRE(static_cast<bool>(is));
  std::string magic;
  is >> magic;
  CHECK(magic == "P5");
  int w = 0, h = 0, maxv = 0;
  is >> w >> h >> maxv;
  CHECK(w == 32);
  CHECK(h == 32);
  CHECK(maxv == 255);
  is.get();
  std::vector<char> data(static_cast<std::size_t>(w) * h);
  is.read(data.data(), static_cast<std::streamsize>(data.size()));
  CHECK(is.gcount() == static_cast<std::streamsize>(data.size()));
  std::filesystem::remove_all(dir);
}

TEST_CASE("lookat bob keeps the bob centered") {
  // when the camera tracks the bob, the brightest disc stays at the center
  // regardless of theta
  for (double theta : {0.3, 1.2, 2.5}) {
    Image img = render(pendulum_scene(theta, Lookat::bob), {3.0, 90.0, -45.0}, 32);
    double ci = 0.0, cj = 0.0;
    int n = 0;
    for (int r = 0; r < 32; ++r) {
      for (int c = 0; c < 32; ++c) {
        if (img.at(r, c) == kBobIntensity) {
          ci += r + 0.5;
          cj += c + 0.5;
          ++n;
        }
      }
    }
    REQUIRE(n > 0);
    CHECK(std::abs(ci / n - 16.0) <= 1.5);
    CHECK(std::abs(cj / n - 16.0) <= 1.5);
  }
}

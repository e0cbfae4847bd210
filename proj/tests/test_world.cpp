#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pampi/world.hpp"

using namespace pampi;

TEST_CASE("cwall scene layout") {
  const Scene sc = build_scene({SceneFamily::CWall, 0.5, 0});
  REQUIRE(sc.obstacles.size() == 3);
  CHECK(sc.goal_pos.x() - sc.start_pos.x() == Catch::Approx(3.0));
  CHECK(sc.goal_pos.y() == sc.start_pos.y());
  // back panel w wide, centered between start and goal
  CHECK(sc.obstacles[0].center.x() == Catch::Approx(2.0));
  CHECK(sc.obstacles[0].half_extents.y() == Catch::Approx(0.25));
  // start and goal clear of the geometry
  CHECK_FALSE(true_collision(sc, sc.start_pos, 0.15).collided);
  CHECK_FALSE(true_collision(sc, sc.goal_pos, 0.15).collided);
}

TEST_CASE("hole scene has a seeded aperture") {
  const Scene a = build_scene({SceneFamily::Hole, 1.0, 42});
  const Scene b = build_scene({SceneFamily::Hole, 1.0, 42});
  const Scene c = build_scene({SceneFamily::Hole, 1.0, 43});
  REQUIRE(a.obstacles.size() == 1);
  REQUIRE(a.obstacles[0].has_hole());
  CHECK(a.obstacles[0].hole_center == b.obstacles[0].hole_center);
  CHECK(a.obstacles[0].hole_center != c.obstacles[0].hole_center);
  // full-diameter clearance from the wall edges
  const Vec3 hc = a.obstacles[0].hole_center;
  CHECK(hc.y() >= 1.0);
  CHECK(hc.y() <= 3.0);
}

TEST_CASE("fourwall scene staggers the walls") {
  const Scene sc = build_scene({SceneFamily::FourWall, 1.5, 0});
  REQUIRE(sc.obstacles.size() == 4);
  CHECK(sc.obstacles[0].center.y() != sc.obstacles[1].center.y());
}

TEST_CASE("oversized hole rejected") {
  CHECK_THROWS_AS(build_scene({SceneFamily::Hole, 5.0, 0}),
                  std::invalid_argument);
}

TEST_CASE("wall 2 m ahead renders depth 2 at the center pixel") {
  Scene sc;
  sc.bounds = {Vec3(0, 0, 0), Vec3(10, 10, 10)};
  ObstaclePrimitive wall;
  wall.center = Vec3(5.0, 5.0, 5.0);
  wall.half_extents = Vec3(0.05, 5.0, 5.0);
  sc.obstacles.push_back(wall);
  const auto in = CameraIntrinsics::with_hfov(64, 48, M_PI / 2, 5.0);
  const DepthImage img =
      render_depth(sc, Vec3(2.95, 5.0, 5.0), Quat::Identity(), in);
  CHECK(img.at(32, 24) == Catch::Approx(2.0));
  // every pixel sees the wall, depth >= perpendicular distance
  for (float d : img.depths) {
    REQUIRE(std::isfinite(d));
    REQUIRE(d >= 2.0f - 1e-5f);
  }
}

TEST_CASE("center ray through a hole yields no return") {
  const Scene sc = build_scene({SceneFamily::Hole, 1.0, 7});
  const Vec3 hc = sc.obstacles[0].hole_center;
  const auto in = CameraIntrinsics::with_hfov(65, 49, M_PI / 2, 5.0);
  const Vec3 cam = hc - Vec3(1.5, 0.0, 0.0);
  const DepthImage img = render_depth(sc, cam, Quat::Identity(), in);
  CHECK(img.at(32, 24) == DepthImage::kNoReturn);
  // a pixel looking just outside the rim hits the wall
  CHECK(std::isfinite(img.at(19, 24)));
}

TEST_CASE("empty scene renders all no-return") {
  const Scene sc = build_scene({SceneFamily::Empty, 0.0, 0});
  const auto in = CameraIntrinsics::with_hfov(32, 24, M_PI / 2, 5.0);
  const DepthImage img =
      render_depth(sc, sc.start_pos, Quat::Identity(), in);
  for (float d : img.depths) REQUIRE(d == DepthImage::kNoReturn);
}

TEST_CASE("collision at a wall surface reports penetration") {
  Scene sc;
  sc.bounds = {Vec3(-10, -10, -10), Vec3(10, 10, 10)};
  ObstaclePrimitive wall;
  wall.center = Vec3(0.0, 0.0, 0.0);
  wall.half_extents = Vec3(0.05, 2.0, 2.0);
  sc.obstacles.push_back(wall);
  const auto r = true_collision(sc, Vec3(-0.05, 0.0, 0.0), 0.15);
  CHECK(r.collided);
  CHECK(r.penetration == Catch::Approx(0.15));
}

TEST_CASE("sphere centered in a 1 m hole is collision free") {
  const Scene sc = build_scene({SceneFamily::Hole, 1.0, 3});
  const auto r = true_collision(sc, sc.obstacles[0].hole_center, 0.15);
  CHECK_FALSE(r.collided);
  // but a fatter sphere touches the rim: 0.5 - 0.45 < 0.45
  CHECK(true_collision(sc, sc.obstacles[0].hole_center, 0.55).collided);
}

TEST_CASE("leaving the bounds counts as collision") {
  const Scene sc = build_scene({SceneFamily::Empty, 0.0, 0});
  CHECK(true_collision(sc, Vec3(0.05, 2.0, 1.0), 0.15).collided);
  CHECK_FALSE(true_collision(sc, Vec3(0.5, 2.0, 1.0), 0.15).collided);
}

TEST_CASE("finite depth pixels back-project onto obstacle surfaces") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (SceneFamily fam :
       {SceneFamily::CWall, SceneFamily::Hole, SceneFamily::FourWall}) {
    const Scene sc = build_scene({fam, 1.0, 9});
    const auto in = CameraIntrinsics::with_hfov(33, 25, M_PI / 2, 5.0);
    const Vec3 cam = sc.start_pos + Vec3(0.0, 0.3 * u(rng), 0.0);
    const double yaw = 0.3 * (u(rng) - 0.5);
    const Quat q(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
    const DepthImage img = render_depth(sc, cam, q, in);
    for (int v = 0; v < in.height; ++v) {
      for (int u_px = 0; u_px < in.width; ++u_px) {
        const float d = img.at(u_px, v);
        if (!std::isfinite(d)) continue;
        const Vec3 p = cam + q * (static_cast<double>(d) * pixel_ray(in, u_px, v));
        double best = 1e9;
        for (const auto& o : sc.obstacles) best = std::min(best, o.distance(p));
        REQUIRE(best < 1e-6);
      }
    }
  }
}

TEST_CASE("removing an obstacle never decreases depth") {
  const Scene full = build_scene({SceneFamily::FourWall, 1.5, 0});
  Scene pruned = full;
  pruned.obstacles.erase(pruned.obstacles.begin());
  const auto in = CameraIntrinsics::with_hfov(32, 24, M_PI / 2, 5.0);
  const DepthImage a = render_depth(full, full.start_pos, Quat::Identity(), in);
  const DepthImage b =
      render_depth(pruned, pruned.start_pos, Quat::Identity(), in);
  for (size_t i = 0; i < a.depths.size(); ++i) REQUIRE(b.depths[i] >= a.depths[i]);
}

TEST_CASE("scene construction is deterministic") {
  const Scene a = build_scene({SceneFamily::Hole, 0.5, 77});
  const Scene b = build_scene({SceneFamily::Hole, 0.5, 77});
  REQUIRE(a.obstacles.size() == b.obstacles.size());
  for (size_t i = 0; i < a.obstacles.size(); ++i) {
    CHECK(a.obstacles[i].center == b.obstacles[i].center);
    CHECK(a.obstacles[i].hole_center == b.obstacles[i].hole_center);
  }
}

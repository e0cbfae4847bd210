#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pampi/dynamics.hpp"

namespace pampi {

struct Aabb {
  Vec3 min;
  Vec3 max;

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 clamp(const Vec3& p) const {
    return p.cwiseMax(min).cwiseMin(max);
  }
  Vec3 extent() const { return max - min; }
};

/// Axis-aligned box, optionally with a circular hole drilled through it
/// along one axis (hole_axis). hole_diameter <= 0 means solid box.
struct ObstaclePrimitive {
  Vec3 center;
  Vec3 half_extents;
  int hole_axis{-1};        // 0/1/2, or -1 for solid
  Vec3 hole_center;         // point on the hole axis line
  double hole_diameter{0.0};

  bool has_hole() const { return hole_axis >= 0 && hole_diameter > 0.0; }

  void validate() const {
    if (!(half_extents.minCoeff() > 0.0)) {
      throw std::invalid_argument("ObstaclePrimitive: half extents must be > 0");
    }
    if (has_hole()) {
      double min_lateral = std::numeric_limits<double>::max();
      for (int a = 0; a < 3; ++a) {
        if (a != hole_axis) min_lateral = std::min(min_lateral, 2.0 * half_extents(a));
      }
      if (hole_diameter >= min_lateral) {
        throw std::invalid_argument("ObstaclePrimitive: hole wider than wall");
      }
    }
  }

  // signed distance from p to the material (0 inside). Exact for the solid
  // box; for the holed wall the two candidate closest features are the
  // clamped box point and the hole rim.
  double distance(const Vec3& p) const {
    if (!has_hole()) return box_distance(p);

    const Vec3 q = clamp_to_box(p);
    const double sq = radial(q);
    double best = std::numeric_limits<double>::max();
    if (sq >= 0.5 * hole_diameter) best = (p - q).norm();

    // nearest point on the hole cylinder shell, clamped axially to the wall
    const double sp = radial(p);
    const double ax = std::abs(p(hole_axis) - center(hole_axis));
    const double da = std::max(0.0, ax - half_extents(hole_axis));
    const double dr = std::max(0.0, 0.5 * hole_diameter - sp);
    best = std::min(best, std::sqrt(da * da + dr * dr));
    return best;
  }

  struct Hit {
    double t;  // ray parameter of entry
  };

  // nearest intersection with ray o + t*d for t in [t_lo, t_hi]
  std::optional<Hit> raycast(const Vec3& o, const Vec3& d, double t_lo,
                             double t_hi) const {
    double b0, b1;
    if (!box_interval(o, d, b0, b1)) return std::nullopt;
    b0 = std::max(b0, t_lo);
    b1 = std::min(b1, t_hi);
    if (b0 > b1) return std::nullopt;
    if (!has_hole()) return Hit{b0};

    // subtract the (infinite) hole cylinder interval from [b0, b1]
    double c0, c1;
    if (!cylinder_interval(o, d, c0, c1)) return Hit{b0};
    if (c0 > b0 || c1 < b0) return Hit{b0};  // box entry is not inside the hole
    if (c1 < b1) return Hit{c1};       // exit the hole while still inside box
    return std::nullopt;               // ray stays inside the hole
  }

 private:
  Vec3 clamp_to_box(const Vec3& p) const {
    return p.cwiseMax(center - half_extents).cwiseMin(center + half_extents);
  }
  double box_distance(const Vec3& p) const { return (p - clamp_to_box(p)).norm(); }

  // radial distance from the hole axis
  double radial(const Vec3& p) const {
    double s2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      if (a == hole_axis) continue;
      const double d = p(a) - hole_center(a);
      s2 += d * d;
    }
    return std::sqrt(s2);
  }

  bool box_interval(const Vec3& o, const Vec3& d, double& t0, double& t1) const {
    t0 = -std::numeric_limits<double>::infinity();
    t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      const double lo = center(a) - half_extents(a), hi = center(a) + half_extents(a);
      if (d(a) == 0.0) {
        if (o(a) < lo || o(a) > hi) return false;
        continue;
      }
      double ta = (lo - o(a)) / d(a), tb = (hi - o(a)) / d(a);
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return false;
    }
    return true;
  }

  bool cylinder_interval(const Vec3& o, const Vec3& d, double& t0, double& t1) const {
    // 2D quadratic in the plane orthogonal to the hole axis
    double a2 = 0.0, b2 = 0.0, c2 = 0.0;
    const double r = 0.5 * hole_diameter;
    for (int a = 0; a < 3; ++a) {
      if (a == hole_axis) continue;
      const double oo = o(a) - hole_center(a);
      a2 += d(a) * d(a);
      b2 += oo * d(a);
      c2 += oo * oo;
    }
    c2 -= r * r;
    if (a2 == 0.0) {
      if (c2 >= 0.0) return false;
      t0 = -std::numeric_limits<double>::infinity();
      t1 = std::numeric_limits<double>::infinity();
      return true;
    }
    const double disc = b2 * b2 - a2 * c2;
    if (disc <= 0.0) return false;
    const double sq = std::sqrt(disc);
    t0 = (-b2 - sq) / a2;
    t1 = (-b2 + sq) / a2;
    return true;
  }
};

struct Scene {
  std::vector<ObstaclePrimitive> obstacles;
  Aabb bounds;
  Vec3 start_pos;
  double start_yaw{0.0};
  Vec3 goal_pos;
  double goal_yaw{0.0};
};

enum class SceneFamily { Empty, CWall, Hole, FourWall };

inline SceneFamily scene_family_from_string(const std::string& s) {
  if (s == "empty") return SceneFamily::Empty;
  if (s == "cwall") return SceneFamily::CWall;
  if (s == "hole") return SceneFamily::Hole;
  if (s == "fourwall") return SceneFamily::FourWall;
  throw std::invalid_argument("unknown scene family: " + s);
}

inline std::string to_string(SceneFamily f) {
  switch (f) {
    case SceneFamily::Empty: return "empty";
    case SceneFamily::CWall: return "cwall";
    case SceneFamily::Hole: return "hole";
    case SceneFamily::FourWall: return "fourwall";
  }
  return "?";
}

struct SceneSpec {
  SceneFamily family{SceneFamily::Empty};
  double size{1.0};       // wall width w or hole diameter d, meters
  uint64_t seed{0};       // hole placement seed
};

/// 4 x 4 x 2 m arena; start at (0.5, 2, 1) facing +x, goal 3 m ahead.
/// Wall thickness 0.1 m, walls span the full arena height.
inline Scene build_scene(const SceneSpec& spec) {
  Scene sc;
  sc.bounds = Aabb{Vec3(0, 0, 0), Vec3(4, 4, 2)};
  sc.start_pos = Vec3(0.5, 2.0, 1.0);
  sc.start_yaw = 0.0;
  sc.goal_pos = Vec3(3.5, 2.0, 1.0);
  sc.goal_yaw = 0.0;

  const double th = 0.05;   // wall half-thickness
  const double zc = 1.0, zh = 1.0;

  auto wall = [&](double xc, double yc, double half_w) {
    ObstaclePrimitive o;
    o.center = Vec3(xc, yc, zc);
    o.half_extents = Vec3(th, half_w, zh);
    return o;
  };

  switch (spec.family) {
    case SceneFamily::Empty:
      break;
    case SceneFamily::CWall: {
      const double w = spec.size;
      if (!(w > 0.0)) throw std::invalid_argument("cwall: size must be > 0");
      // back panel at x = 2, two side panels 0.5 m deep opening toward start
      sc.obstacles.push_back(wall(2.0, 2.0, 0.5 * w));
      for (double sgn : {-1.0, 1.0}) {
        ObstaclePrimitive o;
        o.center = Vec3(1.75, 2.0 + sgn * 0.5 * w, zc);
        o.half_extents = Vec3(0.25 + th, th, zh);
        sc.obstacles.push_back(o);
      }
      break;
    }
    case SceneFamily::Hole: {
      const double d = spec.size;
      ObstaclePrimitive o;
      o.center = Vec3(2.0, 2.0, zc);
      o.half_extents = Vec3(th, 2.0, zh);
      o.hole_axis = 0;
      o.hole_diameter = d;
      // seeded hole position with full-diameter clearance from the edges
      std::mt19937_64 rng(spec.seed);
      const double ylo = d, yhi = 4.0 - d;
      const double zlo = std::min(d, 1.0), zhi = std::max(2.0 - d, 1.0);
      std::uniform_real_distribution<double> uy(std::min(ylo, yhi), std::max(ylo, yhi));
      std::uniform_real_distribution<double> uz(zlo, zhi);
      o.hole_center = Vec3(2.0, uy(rng), uz(rng));
      o.validate();
      sc.obstacles.push_back(o);
      break;
    }
    case SceneFamily::FourWall: {
      const double w = spec.size;
      if (!(w > 0.0)) throw std::invalid_argument("fourwall: size must be > 0");
      const double xs[4] = {1.2, 1.6, 2.4, 2.8};
      for (int i = 0; i < 4; ++i) {
        const double off = (i % 2 == 0 ? -1.0 : 1.0) * 0.5 * w;
        sc.obstacles.push_back(wall(xs[i], 2.0 + off, 0.5 * w));
      }
      break;
    }
  }
  for (const auto& o : sc.obstacles) o.validate();
  return sc;
}

/// True iff the sphere (p, radius) penetrates any obstacle or leaves the
/// arena. Also reports penetration depth for metrics.
struct CollisionResult {
  bool collided{false};
  double penetration{0.0};
};

inline CollisionResult true_collision(const Scene& sc, const Vec3& p,
                                      double radius) {
  CollisionResult r;
  for (const auto& o : sc.obstacles) {
    const double d = o.distance(p);
    if (d < radius) {
      r.collided = true;
      r.penetration = std::max(r.penetration, radius - d);
    }
  }
  // out-of-bounds counts as collision
  for (int a = 0; a < 3; ++a) {
    const double under = sc.bounds.min(a) + radius - p(a);
    const double over = p(a) - (sc.bounds.max(a) - radius);
    const double v = std::max(under, over);
    if (v > 0.0) {
      r.collided = true;
      r.penetration = std::max(r.penetration, v);
    }
  }
  return r;
}

struct CameraIntrinsics {
  int width{320};
  int height{240};
  double fx{160.0};
  double fy{160.0};
  double cx{160.0};
  double cy{120.0};
  double max_range{5.0};

  static CameraIntrinsics with_hfov(int w, int h, double hfov_rad,
                                    double max_range) {
    CameraIntrinsics in;
    in.width = w;
    in.height = h;
    in.fx = (w / 2.0) / std::tan(0.5 * hfov_rad);
    in.fy = in.fx;
    in.cx = w / 2.0;
    in.cy = h / 2.0;
    in.max_range = max_range;
    return in;
  }
};

/// Dense z-depth image; no-return pixels hold +inf.
struct DepthImage {
  CameraIntrinsics intrinsics;
  std::vector<float> depths;  // row-major, width*height

  static constexpr float kNoReturn = std::numeric_limits<float>::infinity();

  float at(int u, int v) const { return depths[v * intrinsics.width + u]; }
};

/// Camera-frame ray direction of pixel (u, v), body convention:
/// x forward (principal axis), pixel offsets map to y/z.
inline Vec3 pixel_ray(const CameraIntrinsics& in, int u, int v) {
  return Vec3(1.0, (u - in.cx) / in.fx, (v - in.cy) / in.fy);
}

/// Per-pixel analytic ray cast. Depth is distance along the principal
/// axis (z-depth), not euclidean ray length.
inline DepthImage render_depth(const Scene& sc, const Vec3& cam_pos,
                               const Quat& cam_q, const CameraIntrinsics& in) {
  DepthImage img;
  img.intrinsics = in;
  img.depths.assign(static_cast<size_t>(in.width) * in.height,
                    DepthImage::kNoReturn);
  const Eigen::Matrix3d R = cam_q.toRotationMatrix();
  for (int v = 0; v < in.height; ++v) {
    for (int u = 0; u < in.width; ++u) {
      const Vec3 dir = R * pixel_ray(in, u, v);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& o : sc.obstacles) {
        if (auto h = o.raycast(cam_pos, dir, 1e-9, best)) {
          best = std::min(best, h->t);
        }
      }
      if (best <= in.max_range) {
        img.depths[static_cast<size_t>(v) * in.width + u] =
            static_cast<float>(best);
      }
    }
  }
  return img;
}

}  // namespace pampi

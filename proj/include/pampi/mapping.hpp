#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "pampi/world.hpp"

namespace pampi {

/// Shared voxel lattice geometry. Indexing is x-major (x slowest):
/// flat = (x * Y + y) * Z + z.
struct GridGeom {
  Vec3 origin{Vec3::Zero()};
  std::array<int, 3> dims{0, 0, 0};
  double resolution{0.1};

  static GridGeom from_bounds(const Aabb& b, double res) {
    GridGeom g;
    g.origin = b.min;
    g.resolution = res;
    const Vec3 e = b.extent();
    for (int a = 0; a < 3; ++a) g.dims[a] = static_cast<int>(std::ceil(e(a) / res - 1e-9));
    return g;
  }

  size_t voxel_count() const {
    return static_cast<size_t>(dims[0]) * dims[1] * dims[2];
  }

  // Cell index along one axis; exact boundaries belong to the lower cell.
  static long axis_index(double g) {
    const double f = std::floor(g);
    if (g == f) return static_cast<long>(f) - 1;
    return static_cast<long>(f);
  }

  std::array<long, 3> voxel_of(const Vec3& p) const {
    std::array<long, 3> v;
    for (int a = 0; a < 3; ++a) v[a] = axis_index((p(a) - origin(a)) / resolution);
    return v;
  }

  bool in_bounds(const std::array<long, 3>& v) const {
    for (int a = 0; a < 3; ++a) {
      if (v[a] < 0 || v[a] >= dims[a]) return false;
    }
    return true;
  }

  size_t flat(const std::array<long, 3>& v) const {
    return (static_cast<size_t>(v[0]) * dims[1] + v[1]) * dims[2] + v[2];
  }

  Vec3 voxel_center(const std::array<long, 3>& v) const {
    return origin + resolution * Vec3(v[0] + 0.5, v[1] + 0.5, v[2] + 0.5);
  }
};

/// Amanatides-Woo traversal of the segment from -> to. The visitor is
/// called once per voxel with (index, entry fraction in [0,1]); returning
/// false stops the walk. Returns true if the end voxel was reached while
/// staying inside the grid, false if the segment left the grid or the
/// visitor stopped it.
template <typename Visitor>
inline bool dda_traverse(const GridGeom& g, const Vec3& from, const Vec3& to,
                         Visitor&& visit, bool* exited_bounds = nullptr) {
  if (exited_bounds) *exited_bounds = false;
  const Vec3 d = to - from;
  std::array<long, 3> v = g.voxel_of(from);
  const std::array<long, 3> ve = g.voxel_of(to);

  if (!g.in_bounds(v)) {
    if (exited_bounds) *exited_bounds = true;
    return false;
  }

  std::array<long, 3> step{0, 0, 0};
  Vec3 t_max(std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity());
  Vec3 t_delta = t_max;
  for (int a = 0; a < 3; ++a) {
    if (d(a) > 0.0) {
      step[a] = 1;
      t_max(a) = (g.origin(a) + (v[a] + 1) * g.resolution - from(a)) / d(a);
      t_delta(a) = g.resolution / d(a);
    } else if (d(a) < 0.0) {
      step[a] = -1;
      t_max(a) = (g.origin(a) + v[a] * g.resolution - from(a)) / d(a);
      t_delta(a) = -g.resolution / d(a);
    }
  }

  double t_entry = 0.0;
  for (;;) {
    if (!visit(v, t_entry)) return false;
    if (v == ve) return true;
    int m = 0;
    if (t_max(1) < t_max(m)) m = 1;
    if (t_max(2) < t_max(m)) m = 2;
    if (t_max(m) > 1.0) return true;  // numerically at the end voxel
    t_entry = t_max(m);
    v[m] += step[m];
    t_max(m) += t_delta(m);
    if (v[m] < 0 || v[m] >= g.dims[m]) {
      if (exited_bounds) *exited_bounds = true;
      return false;
    }
  }
}

/// Immutable three-state snapshot: occupied 1, free 0, unknown -1.
struct OccupancyGrid {
  GridGeom geom;
  std::vector<int8_t> values;
  uint64_t version{0};

  int8_t at(const std::array<long, 3>& v) const {
    if (!geom.in_bounds(v)) return -1;
    return values[geom.flat(v)];
  }

  /// O(1) position lookup; outside the grid counts as unknown.
  int8_t lookup(const Vec3& p) const { return at(geom.voxel_of(p)); }
};

using GridSnapshot = std::shared_ptr<const OccupancyGrid>;

enum class RayOutcome { ReachedGoal, HitOccupied, HitUnknown, LeftBounds };

struct RayResult {
  RayOutcome outcome{RayOutcome::ReachedGoal};
  double t_star{1.0};
  std::array<long, 3> voxel{0, 0, 0};
};

/// Walks the grid from one point to another and stops at the first
/// non-free voxel. Used by the perception cost's goal ray.
inline RayResult raycast_dda(const OccupancyGrid& grid, const Vec3& from,
                             const Vec3& to) {
  RayResult r;
  r.voxel = grid.geom.voxel_of(from);
  bool exited = false;
  const bool reached = dda_traverse(
      grid.geom, from, to,
      [&](const std::array<long, 3>& v, double t) {
        r.voxel = v;
        r.t_star = t;
        const int8_t s = grid.values[grid.geom.flat(v)];
        if (s == 0) return true;
        r.outcome = s == 1 ? RayOutcome::HitOccupied : RayOutcome::HitUnknown;
        return false;
      },
      &exited);
  if (reached) {
    r.outcome = RayOutcome::ReachedGoal;
    r.t_star = 1.0;
  } else if (exited) {
    r.outcome = RayOutcome::LeftBounds;
  }
  return r;
}

/// Aggregating evidence map. Single writer; snapshots are immutable and
/// cheap to share with concurrent readers.
class VoxelMap {
 public:
  VoxelMap(const Aabb& bounds, double resolution = 0.1)
      : geom_(GridGeom::from_bounds(bounds, resolution)),
        evidence_(geom_.voxel_count(), 0),
        observed_(geom_.voxel_count(), 0),
        endpoint_stamp_(geom_.voxel_count(), 0) {}

  const GridGeom& geom() const { return geom_; }

  /// Carves free space along each sensor ray and accumulates occupied
  /// evidence at return endpoints. Out-of-bounds segments are clipped.
  /// Within one cloud, endpoint voxels are excluded from carving: a surface
  /// voxel grazed by oblique rays while also receiving returns must not be
  /// eroded to free by the same frame that observed it occupied.
  void insert_pointcloud(const Vec3& sensor_origin,
                         const std::vector<Vec3>& returns,
                         const std::vector<Vec3>& free_endpoints) {
    ++frame_;
    for (const Vec3& e : returns) {
      const std::array<long, 3> v = geom_.voxel_of(e);
      if (geom_.in_bounds(v)) endpoint_stamp_[geom_.flat(v)] = frame_;
    }
    for (const Vec3& e : returns) insert_ray(sensor_origin, e, true);
    for (const Vec3& e : free_endpoints) insert_ray(sensor_origin, e, false);
  }

  GridSnapshot snapshot() {
    auto grid = std::make_shared<OccupancyGrid>();
    grid->geom = geom_;
    grid->values.resize(geom_.voxel_count());
    for (size_t i = 0; i < evidence_.size(); ++i) {
      // tie between occupied and free evidence counts as occupied
      grid->values[i] = observed_[i] ? (evidence_[i] >= 0 ? 1 : 0) : -1;
    }
    grid->version = ++version_;
    return grid;
  }

  // test hooks
  void mark_occupied(const std::array<long, 3>& v) { bump(v, +1); }
  void mark_free(const std::array<long, 3>& v) { bump(v, -1); }

 private:
  void bump(const std::array<long, 3>& v, int delta) {
    const size_t i = geom_.flat(v);
    const int e = evidence_[i] + delta;
    evidence_[i] = static_cast<int8_t>(std::clamp(e, -127, 127));
    observed_[i] = 1;
  }

  void insert_ray(const Vec3& from, const Vec3& to, bool endpoint_occupied) {
    const std::array<long, 3> ve = geom_.voxel_of(to);
    dda_traverse(geom_, from, to, [&](const std::array<long, 3>& v, double) {
      if (endpoint_occupied && v == ve) {
        bump(v, +1);
        return false;
      }
      if (endpoint_stamp_[geom_.flat(v)] != frame_) bump(v, -1);
      return true;
    });
  }

  GridGeom geom_;
  std::vector<int8_t> evidence_;
  std::vector<uint8_t> observed_;
  std::vector<uint64_t> endpoint_stamp_;
  uint64_t frame_{0};
  uint64_t version_{0};
};

/// World-frame point cloud extracted from a depth image. Finite pixels
/// become returns; no-return pixels become free-ray endpoints at max
/// range, used only for carving.
struct PointCloud {
  std::vector<Vec3> returns;
  std::vector<Vec3> free_endpoints;
};

inline PointCloud depth_to_pointcloud(const DepthImage& img,
                                      const Vec3& cam_pos, const Quat& cam_q) {
  PointCloud pc;
  const auto& in = img.intrinsics;
  pc.returns.reserve(img.depths.size());
  const Eigen::Matrix3d R = cam_q.toRotationMatrix();
  for (int v = 0; v < in.height; ++v) {
    for (int u = 0; u < in.width; ++u) {
      const float z = img.at(u, v);
      const Vec3 ray = pixel_ray(in, u, v);
      if (std::isfinite(z)) {
        pc.returns.push_back(cam_pos + R * (static_cast<double>(z) * ray));
      } else {
        pc.free_endpoints.push_back(cam_pos +
                                    R * (in.max_range * ray.normalized()));
      }
    }
  }
  return pc;
}

}  // namespace pampi

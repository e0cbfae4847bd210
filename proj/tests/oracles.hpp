// Test-only reference implementations, independent of the library's
// production code paths.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "pampi/dynamics.hpp"
#include "pampi/mapping.hpp"

namespace pampi::oracle {

/// Fine-step Euler integration of the raw dynamics (no clipping), used as
/// a truncation-error reference for coarse steps.
inline QuadState integrate_fine(const QuadState& s0, double thrust,
                                const Vec3& tau, const QuadParams& p,
                                double duration, double dt = 1e-4) {
  QuadState s = s0;
  double t = 0.0;
  while (t < duration - 0.5 * dt) {
    const StateDerivative d = state_derivative(s, thrust, tau, p);
    s.p += dt * d.p_dot;
    const Vec4 qv = Vec4(s.q.w(), s.q.x(), s.q.y(), s.q.z()) + dt * d.q_dot;
    s.q = Quat(qv(0), qv(1), qv(2), qv(3)).normalized();
    s.v += dt * d.v_dot;
    s.omega += dt * d.omega_dot;
    t += dt;
  }
  return s;
}

/// Voxel sequence of a segment by dense point sampling (base step =
/// resolution/100), with bisection refinement at each voxel transition so
/// that voxels crossed for less than one sample step are not skipped.
inline std::vector<std::array<long, 3>> ray_voxels_dense(const GridGeom& g,
                                                         const Vec3& from,
                                                         const Vec3& to) {
  std::vector<std::array<long, 3>> seq;
  const double len = (to - from).norm();
  const double step = g.resolution / 100.0;
  const long n = std::max<long>(1, static_cast<long>(std::ceil(len / step)));

  auto voxel_at = [&](double t) { return g.voxel_of(from + t * (to - from)); };

  auto emit = [&](const std::array<long, 3>& v) {
    if (seq.empty() || seq.back() != v) seq.push_back(v);
  };

  // refine (t0, v0) -> (t1, v1) until consecutive voxels are face
  // neighbors, emitting every intermediate voxel in crossing order
  std::function<void(double, std::array<long, 3>, double, std::array<long, 3>)>
      refine = [&](double t0, std::array<long, 3> v0, double t1,
                   std::array<long, 3> v1) {
        if (v0 == v1) return;
        int diff = 0;
        for (int a = 0; a < 3; ++a) diff += (v0[a] != v1[a]) ? 1 : 0;
        if (t1 - t0 < 1e-13) {
          // unresolvably close to a corner; emit in axis order
          emit(v1);
          return;
        }
        if (diff == 1 && std::abs(v0[0] - v1[0]) + std::abs(v0[1] - v1[1]) +
                                 std::abs(v0[2] - v1[2]) ==
                             1) {
          emit(v1);
          return;
        }
        const double tm = 0.5 * (t0 + t1);
        const std::array<long, 3> vm = voxel_at(tm);
        refine(t0, v0, tm, vm);
        emit(vm);
        refine(tm, vm, t1, v1);
      };

  std::array<long, 3> prev = voxel_at(0.0);
  emit(prev);
  double t_prev = 0.0;
  for (long i = 1; i <= n; ++i) {
    const double t = std::min(1.0, static_cast<double>(i) / n);
    const std::array<long, 3> v = voxel_at(t);
    if (v != prev) refine(t_prev, prev, t, v);
    emit(v);
    prev = v;
    t_prev = t;
  }
  return seq;
}

/// In-bounds prefix of the dense voxel sequence (what a clipped traversal
/// should visit).
inline std::vector<std::array<long, 3>> clip_to_bounds(
    const GridGeom& g, const std::vector<std::array<long, 3>>& seq) {
  std::vector<std::array<long, 3>> out;
  for (const auto& v : seq) {
    if (!g.in_bounds(v)) break;
    out.push_back(v);
  }
  return out;
}

}  // namespace pampi::oracle

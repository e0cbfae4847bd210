#pragma once

#include <cmath>

#include "pampi/dynamics.hpp"
#include "pampi/mapping.hpp"

namespace pampi {

/// Stage-cost weights. Defaults follow the tuned controller constants.
struct CostParams {
  double c_pos{2.5};
  double c_psi{1.0};
  double c_collision{15.0};
  double c_poi{5.0};
  double c_thresh{0.5};       // m, PoI deactivation distance
  double c_free{-5.0};
  double c_unknown{-1.0};
  double c_occupied{2.0};
  Vec4 R{0.01, 0.1, 0.1, 0.2};
  Vec4 R_delta{0.02, 0.02, 0.02, 0.05};
  double c_safe{0.0};
  double v_bound{0.1};        // m/s, terminal hover set
  double omega_bound{0.5};    // rad/s
  int raytrace_stride{10};
};

struct GoalPose {
  Vec3 position{Vec3::Zero()};
  double yaw{0.0};
};

inline double wrap_angle_diff(double a, double b) {
  return std::atan2(std::sin(a - b), std::cos(a - b));
}

/// Goal attraction: position pull scaled by exp(-||d||^2), yaw alignment
/// folded into the same envelope so it only matters near the goal.
inline double goal_cost(const QuadState& s, const GoalPose& goal,
                        const CostParams& prm) {
  const Vec3 d = s.p - goal.position;
  const double dpsi = wrap_angle_diff(s.yaw(), goal.yaw);
  return (-prm.c_pos + prm.c_psi * std::abs(dpsi)) * std::exp(-d.squaredNorm());
}

inline double action_cost(const ControlCommand& u, const ControlCommand& u_prev,
                          const CostParams& prm) {
  const Vec4 uv = u.as_vec();
  const Vec4 du = uv - u_prev.as_vec();
  return uv.cwiseProduct(uv).dot(prm.R) + du.cwiseProduct(du).dot(prm.R_delta);
}

/// Penalizes any position outside known free space (occupied or unknown).
inline double collision_cost(const Vec3& p, const OccupancyGrid& grid,
                             const CostParams& prm) {
  return grid.lookup(p) != 0 ? prm.c_collision : 0.0;
}

/// Point-of-interest alignment plus the goal-directed ray term. The ray is
/// only traced when do_raytrace is set (expensive); leaving the mapped box
/// counts as an unknown frontier.
inline double perception_cost(const QuadState& s, const OccupancyGrid& grid,
                              const GoalPose& goal, const CostParams& prm,
                              bool do_raytrace) {
  const Vec3 d = goal.position - s.p;
  const double dist = d.norm();
  double cost = 0.0;
  if (dist > prm.c_thresh) {
    const Vec3 cam_axis = s.q * Vec3::UnitX();
    const double align = cam_axis.dot(d / dist);
    cost += prm.c_poi * (1.0 - align) * (1.0 - align);
  }
  if (do_raytrace) {
    const RayResult r = raycast_dda(grid, s.p, goal.position);
    switch (r.outcome) {
      case RayOutcome::ReachedGoal: cost += prm.c_free; break;
      case RayOutcome::HitOccupied: cost += prm.c_occupied; break;
      case RayOutcome::HitUnknown:
      case RayOutcome::LeftBounds: cost += prm.c_unknown; break;
    }
  }
  return cost;
}

/// Terminal hovering safe set: flat penalty outside the near-rest region.
inline double terminal_cost(const QuadState& s, const CostParams& prm) {
  const bool unsafe =
      s.v.norm() > prm.v_bound || s.omega.norm() > prm.omega_bound;
  return unsafe ? prm.c_safe : 0.0;
}

struct StageCostBreakdown {
  double goal{0.0};
  double action{0.0};
  double collision{0.0};
  double perception{0.0};

  double total() const { return goal + action + collision + perception; }
};

inline StageCostBreakdown stage_cost_terms(const QuadState& s,
                                           const ControlCommand& u,
                                           const ControlCommand& u_prev,
                                           const OccupancyGrid& grid,
                                           const GoalPose& goal,
                                           const CostParams& prm,
                                           int step_index) {
  StageCostBreakdown b;
  b.goal = goal_cost(s, goal, prm);
  b.action = action_cost(u, u_prev, prm);
  b.collision = collision_cost(s.p, grid, prm);
  const bool do_raytrace = (step_index % prm.raytrace_stride) == 0;
  b.perception = perception_cost(s, grid, goal, prm, do_raytrace);
  return b;
}

inline double stage_cost(const QuadState& s, const ControlCommand& u,
                         const ControlCommand& u_prev,
                         const OccupancyGrid& grid, const GoalPose& goal,
                         const CostParams& prm, int step_index) {
  return stage_cost_terms(s, u, u_prev, grid, goal, prm, step_index).total();
}

}  // namespace pampi

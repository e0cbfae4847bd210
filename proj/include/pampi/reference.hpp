#pragma once

#include <cmath>
#include <vector>

#include "pampi/costs.hpp"

namespace pampi {

/// Rest-to-rest minimum-jerk trajectory through uniformly spaced waypoints.
/// For collinear waypoints (the straight-line baseline reference) this is
/// the closed-form quintic s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5 along
/// the chord, independent of the waypoint count.
class ReferenceTrajectory {
 public:
  ReferenceTrajectory(const Vec3& start, const Vec3& goal, double goal_yaw,
                      double duration)
      : start_(start), goal_(goal), goal_yaw_(goal_yaw), duration_(duration) {}

  double duration() const { return duration_; }

  struct Sample {
    Vec3 position;
    Vec3 velocity;
    double yaw;
  };

  /// Clamped to the endpoints outside [0, duration].
  Sample sample(double t) const {
    const double tau = std::clamp(t / duration_, 0.0, 1.0);
    const double s = ((6.0 * tau - 15.0) * tau + 10.0) * tau * tau * tau;
    const double ds = ((30.0 * tau - 60.0) * tau + 30.0) * tau * tau;
    const Vec3 chord = goal_ - start_;
    Sample out;
    out.position = start_ + s * chord;
    out.velocity = (t < 0.0 || t > duration_)
                       ? Vec3(Vec3::Zero())
                       : Vec3((ds / duration_) * chord);
    // face along the direction of travel, goal yaw once at rest
    const Vec3 planar(chord.x(), chord.y(), 0.0);
    out.yaw = (ds > 1e-9 && planar.norm() > 1e-9)
                  ? std::atan2(planar.y(), planar.x())
                  : goal_yaw_;
    return out;
  }

 private:
  Vec3 start_;
  Vec3 goal_;
  double goal_yaw_;
  double duration_;
};

inline std::vector<Vec3> straight_line_waypoints(const Vec3& start,
                                                 const Vec3& goal, int n) {
  std::vector<Vec3> wps;
  wps.reserve(n);
  for (int i = 0; i < n; ++i) {
    wps.push_back(start + (static_cast<double>(i) / (n - 1)) * (goal - start));
  }
  return wps;
}

struct TrackingParams {
  double q_pos{2.5};
  double q_yaw{1.0};
};

/// Tracking error cost for the baseline controller; replaces the goal
/// cost, the perception cost is dropped entirely.
inline double tracking_stage_cost(const QuadState& s, double t,
                                  const ReferenceTrajectory& ref,
                                  const TrackingParams& prm) {
  const auto r = ref.sample(t);
  const double dpsi = wrap_angle_diff(s.yaw(), r.yaw);
  return prm.q_pos * (s.p - r.position).squaredNorm() +
         prm.q_yaw * std::abs(dpsi);
}

}  // namespace pampi

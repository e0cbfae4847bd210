#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace pampi {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Quat = Eigen::Quaterniond;

/// Rigid-body state of the quadrotor. Position/velocity in world frame,
/// angular velocity in body frame, q_WB rotates body to world.
struct QuadState {
  Vec3 p{Vec3::Zero()};
  Quat q{Quat::Identity()};
  Vec3 v{Vec3::Zero()};
  Vec3 omega{Vec3::Zero()};

  bool finite() const {
    return p.allFinite() && v.allFinite() && omega.allFinite() &&
           std::isfinite(q.w()) && q.vec().allFinite();
  }

  double yaw() const {
    const Eigen::Matrix3d R = q.toRotationMatrix();
    return std::atan2(R(1, 0), R(0, 0));
  }
};

/// Collective thrust [N] plus commanded body rates [rad/s].
struct ControlCommand {
  double thrust{0.0};
  Vec3 rates{Vec3::Zero()};

  Vec4 as_vec() const { return Vec4(thrust, rates.x(), rates.y(), rates.z()); }
  bool finite() const { return std::isfinite(thrust) && rates.allFinite(); }
};

struct QuadParams {
  double mass{0.21};                               // kg
  Vec3 inertia{1.98e-3, 1.98e-3, 3.95e-3};         // diagonal of J, kg m^2
  Vec3 gravity{0.0, 0.0, -9.81};                   // m/s^2
  double arm_length{0.194};                        // m
  double thrust_to_weight{6.8};
  int n_rotors{4};
  double k_rate{20.0};                             // rate-loop gain, 1/s
  double yaw_torque_coeff{0.016};                  // torque-to-thrust ratio, m
  double collision_radius{0.15};                   // m

  double max_collective_thrust() const {
    return thrust_to_weight * mass * 9.81;
  }
  double max_motor_thrust() const {
    return max_collective_thrust() / n_rotors;
  }
  double hover_thrust() const { return mass * 9.81; }

  void validate() const {
    if (!(mass > 0.0) || !(inertia.minCoeff() > 0.0) ||
        !(thrust_to_weight > 1.0)) {
      throw std::invalid_argument("QuadParams: mass > 0, J > 0, TWR > 1 required");
    }
  }
};

struct StateDerivative {
  Vec3 p_dot;
  Vec4 q_dot;  // (w, x, y, z) order
  Vec3 v_dot;
  Vec3 omega_dot;
};

/// Continuous-time rigid-body dynamics: thrust along body z, torque-driven
/// body rates with gyroscopic coupling, quaternion kinematics.
inline StateDerivative state_derivative(const QuadState& s, double thrust,
                                        const Vec3& tau, const QuadParams& p) {
  if (!s.finite() || !std::isfinite(thrust) || !tau.allFinite()) {
    throw std::domain_error("state_derivative: non-finite input");
  }
  StateDerivative d;
  d.p_dot = s.v;

  // q_dot = 1/2 * q ⊗ (0, omega)
  const Quat omega_q(0.0, s.omega.x(), s.omega.y(), s.omega.z());
  const Quat qd = s.q * omega_q;
  d.q_dot = 0.5 * Vec4(qd.w(), qd.x(), qd.y(), qd.z());

  d.v_dot = s.q * Vec3(0.0, 0.0, thrust / p.mass) + p.gravity;

  const Vec3 J = p.inertia;
  const Vec3 Jw(J.x() * s.omega.x(), J.y() * s.omega.y(), J.z() * s.omega.z());
  const Vec3 m = tau - s.omega.cross(Jw);
  d.omega_dot = Vec3(m.x() / J.x(), m.y() / J.y(), m.z() / J.z());
  return d;
}

namespace detail {

// Quad-X geometry, arm half-angle 45 deg. Motor lateral offsets (x, y) in
// units of arm_length/sqrt(2); spin +1 = CCW (positive yaw reaction).
struct Mixer {
  // rows: motor; columns contribute to (c, tau_x, tau_y, tau_z)
  double a;      // lateral arm = l / sqrt(2)
  double kappa;  // yaw torque per thrust

  // motor layout: 0 front-left, 1 front-right, 2 back-right, 3 back-left
  static constexpr double mx[4] = {+1, +1, -1, -1};
  static constexpr double my[4] = {+1, -1, -1, +1};
  static constexpr double ms[4] = {-1, +1, -1, +1};

  Mixer(const QuadParams& p)
      : a(p.arm_length / std::sqrt(2.0)), kappa(p.yaw_torque_coeff) {}

  // wrench from motor thrusts: tau_x = sum y_i f_i, tau_y = -sum x_i f_i
  Vec4 wrench(const Vec4& f) const {
    Vec4 w = Vec4::Zero();
    for (int i = 0; i < 4; ++i) {
      w(0) += f(i);
      w(1) += my[i] * a * f(i);
      w(2) -= mx[i] * a * f(i);
      w(3) += ms[i] * kappa * f(i);
    }
    return w;
  }

  // exact inverse of the 4x4 allocation above
  Vec4 allocate(double c, const Vec3& tau) const {
    Vec4 f;
    for (int i = 0; i < 4; ++i) {
      f(i) = 0.25 * (c + my[i] * tau.x() / a - mx[i] * tau.y() / a +
                     ms[i] * tau.z() / kappa);
    }
    return f;
  }
};

}  // namespace detail

/// Inner-loop rate controller + motor allocation + per-motor clamping.
/// Returns the realized command (thrust + equivalent rate command) and the
/// realized body torque. Unclipped commands pass through bit-identically.
inline std::pair<ControlCommand, Vec3> clip_command(const ControlCommand& u,
                                                    const QuadState& s,
                                                    const QuadParams& p) {
  const Vec3 J = p.inertia;
  const Vec3 Jw(J.x() * s.omega.x(), J.y() * s.omega.y(), J.z() * s.omega.z());
  const Vec3 rate_err = u.rates - s.omega;
  const Vec3 tau_des =
      Vec3(J.x() * p.k_rate * rate_err.x(), J.y() * p.k_rate * rate_err.y(),
           J.z() * p.k_rate * rate_err.z()) +
      s.omega.cross(Jw);

  const detail::Mixer mix(p);
  Vec4 f = mix.allocate(u.thrust, tau_des);

  const double f_max = p.max_motor_thrust();
  bool clipped = false;
  for (int i = 0; i < 4; ++i) {
    const double fc = std::clamp(f(i), 0.0, f_max);
    // ignore round-off from the allocate/wrench round trip so that
    // re-clipping a clipped command is an exact identity
    if (std::abs(fc - f(i)) > 1e-12 * std::max(1.0, f_max)) clipped = true;
    f(i) = fc;
  }

  if (!clipped) return {u, tau_des};

  const Vec4 w = mix.wrench(f);
  const Vec3 tau_clip(w(1), w(2), w(3));
  ControlCommand out;
  out.thrust = w(0);
  // rate command that reproduces tau_clip through the same rate loop, so
  // clipping is idempotent
  const Vec3 m = tau_clip - s.omega.cross(Jw);
  out.rates = s.omega + Vec3(m.x() / (J.x() * p.k_rate),
                             m.y() / (J.y() * p.k_rate),
                             m.z() / (J.z() * p.k_rate));
  return {out, tau_clip};
}

/// One forward Euler step with command clipping and quaternion
/// re-normalization. Deterministic.
inline QuadState step(const QuadState& s, const ControlCommand& u, double dt,
                      const QuadParams& p) {
  const auto [uc, tau] = clip_command(u, s, p);
  const StateDerivative d = state_derivative(s, uc.thrust, tau, p);
  QuadState n;
  n.p = s.p + dt * d.p_dot;
  const Vec4 qv = Vec4(s.q.w(), s.q.x(), s.q.y(), s.q.z()) + dt * d.q_dot;
  n.q = Quat(qv(0), qv(1), qv(2), qv(3)).normalized();
  n.v = s.v + dt * d.v_dot;
  n.omega = s.omega + dt * d.omega_dot;
  return n;
}

inline ControlCommand hover_command(const QuadParams& p) {
  return ControlCommand{p.hover_thrust(), Vec3::Zero()};
}

}  // namespace pampi

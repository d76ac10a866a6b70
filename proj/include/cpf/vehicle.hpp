#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpf/geometry.hpp"

namespace cpf {

template <typename Scalar>
struct VehicleLimitsT {
  Scalar max_speed = Scalar(0.3);      // m/s, planar translation norm
  Scalar max_yaw_rate = Scalar(1.5);   // rad/s
  Scalar lag_time_constant = Scalar(0.2);  // s, 0 means exact tracking
};

template <typename Scalar>
struct VehicleStateT {
  PoseT<Scalar> pose;
  BodyVelocityT<Scalar> realized;
};

using VehicleLimits = VehicleLimitsT<double>;
using VehicleState = VehicleStateT<double>;

/// World-frame velocity (xdot, ydot, thetadot) of a body moving with twist `v`.
template <typename Scalar>
Vector3<Scalar> body_to_world(const PoseT<Scalar>& pose,
                              const BodyVelocityT<Scalar>& v) {
  Vector3<Scalar> out;
  out.template head<2>() = rotation(pose.heading) * v.translation();
  out(2) = v.yaw_rate;
  return out;
}

/// Clips a command to the configured limits. Returns true if anything was cut.
template <typename Scalar>
bool saturate(BodyVelocityT<Scalar>& cmd, const VehicleLimitsT<Scalar>& limits) {
  bool clipped = false;
  const Scalar speed = cmd.translation().norm();
  if (speed > limits.max_speed) {
    const Scalar scale = limits.max_speed / speed;
    cmd.longitudinal *= scale;
    cmd.lateral *= scale;
    clipped = true;
  }
  if (std::abs(cmd.yaw_rate) > limits.max_yaw_rate) {
    cmd.yaw_rate = std::copysign(limits.max_yaw_rate, cmd.yaw_rate);
    clipped = true;
  }
  return clipped;
}

/// Pose reached after moving with constant body twist `v` for `dt`
/// (closed-form SE(2) exponential).
template <typename Scalar>
PoseT<Scalar> integrate_pose(const PoseT<Scalar>& pose,
                             const BodyVelocityT<Scalar>& v, Scalar dt) {
  using std::cos;
  using std::sin;
  const Scalar phi = v.yaw_rate * dt;
  Scalar sinc;     // sin(phi)/phi
  Scalar cosc;     // (1 - cos(phi))/phi
  if (std::abs(v.yaw_rate) < Scalar(1e-9)) {
    const Scalar phi2 = phi * phi;
    sinc = Scalar(1) - phi2 / Scalar(6);
    cosc = phi / Scalar(2) - phi * phi2 / Scalar(24);
  } else {
    const Scalar half = sin(phi / Scalar(2));
    sinc = sin(phi) / phi;
    cosc = Scalar(2) * half * half / phi;
  }
  Matrix2<Scalar> left_jacobian;
  left_jacobian << sinc, -cosc, cosc, sinc;
  const Vector2<Scalar> displacement =
      rotation(pose.heading) * (left_jacobian * v.translation()) * dt;
  return {pose.position + displacement, pose.heading + phi};
}

/// Advances the vehicle one step. The command is saturated, the realized
/// twist follows it through an exact first-order lag, and the pose moves
/// under the realized twist held constant over `dt`.
template <typename Scalar>
VehicleStateT<Scalar> step(const VehicleStateT<Scalar>& state,
                           BodyVelocityT<Scalar> cmd, Scalar dt,
                           const VehicleLimitsT<Scalar>& limits,
                           bool* saturated = nullptr) {
  using std::isfinite;
  if (!(dt > Scalar(0) && dt <= Scalar(0.1))) {
    throw std::invalid_argument("vehicle step: dt must lie in (0, 0.1]");
  }
  if (!isfinite(cmd.longitudinal) || !isfinite(cmd.lateral) ||
      !isfinite(cmd.yaw_rate) || !isfinite(state.pose.x()) ||
      !isfinite(state.pose.y()) || !isfinite(state.pose.heading)) {
    throw std::invalid_argument("vehicle step: non-finite input");
  }
  const bool clipped = saturate(cmd, limits);
  if (saturated != nullptr) *saturated = clipped;

  VehicleStateT<Scalar> next;
  if (limits.lag_time_constant <= Scalar(0)) {
    next.realized = cmd;
  } else {
    using std::exp;
    const Scalar keep = exp(-dt / limits.lag_time_constant);
    next.realized.longitudinal =
        cmd.longitudinal + (state.realized.longitudinal - cmd.longitudinal) * keep;
    next.realized.lateral =
        cmd.lateral + (state.realized.lateral - cmd.lateral) * keep;
    next.realized.yaw_rate =
        cmd.yaw_rate + (state.realized.yaw_rate - cmd.yaw_rate) * keep;
  }
  next.pose = integrate_pose(state.pose, next.realized, dt);
  return next;
}

}  // namespace cpf

#pragma once

#include <algorithm>
#include <cmath>

#include "cpf/geometry.hpp"

namespace cpf {

/// Path-following errors of the reference point expressed in the robot
/// frame, plus the reference robot's velocities.
template <typename Scalar>
struct ErrorStateT {
  Scalar e1 = Scalar(0);  // longitudinal, m
  Scalar e2 = Scalar(0);  // lateral, m (positive: reference to the robot's left)
  Scalar e3 = Scalar(0);  // heading, rad
  Scalar reference_speed = Scalar(0);      // V_r
  Scalar reference_turn_rate = Scalar(0);  // omega_r
  Scalar curvature = Scalar(0);            // rho at the reference point
  bool detected = true;
};

using ErrorState = ErrorStateT<double>;

/// [e1, e2, e3] of `reference` seen from `robot`.
template <typename Scalar>
Vector3<Scalar> compute_errors(const PoseT<Scalar>& robot,
                               const PoseT<Scalar>& reference) {
  Vector3<Scalar> e;
  e.template head<2>() =
      rotation(robot.heading).transpose() * (reference.position - robot.position);
  e(2) = wrap_angle(reference.heading - robot.heading);
  return e;
}

template <typename Scalar>
struct ReferenceSpeedLimits {
  Scalar heading_clamp = Scalar(1.2);  // rad, |e3| bound before dividing by cos(e3)
  Scalar max_speed = Scalar(0.6);      // m/s, |V_r| bound
};

/// Speed of the reference robot that keeps e1 at zero:
/// V_r = (V cos(beta) - e2 * omega) / cos(e3).
template <typename Scalar>
Scalar reference_speed(Scalar speed, Scalar beta, Scalar e2, Scalar e3,
                       Scalar applied_yaw_rate,
                       const ReferenceSpeedLimits<Scalar>& limits = {}) {
  using std::cos;
  const Scalar e3c = std::clamp(e3, -limits.heading_clamp, limits.heading_clamp);
  const Scalar vr = (speed * cos(beta) - e2 * applied_yaw_rate) / cos(e3c);
  return std::clamp(vr, -limits.max_speed, limits.max_speed);
}

template <typename Scalar>
Scalar reference_turn_rate(Scalar curvature, Scalar reference_speed) {
  return curvature * reference_speed;
}

/// Assist off-switch: when the path is not detected or the operator presses
/// the override button the controller sees zero lateral and heading error.
template <typename Scalar>
ErrorStateT<Scalar> gate(ErrorStateT<Scalar> errors, bool detected,
                         bool operator_override) {
  errors.detected = detected;
  if (!detected || operator_override) {
    errors.e2 = Scalar(0);
    errors.e3 = Scalar(0);
  }
  return errors;
}

}  // namespace cpf

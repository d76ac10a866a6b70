#pragma once

#include <cmath>

#include "cpf/scenario.hpp"

namespace cpf::testing {

/// Straight path along +x from the origin, no gaps or objects. The vehicle
/// starts at arclength `start_s` with lateral error `e2` and heading error
/// `e3`, measured on the robot's lateral axis.
inline Scenario straight_scenario(double length, double e2, double e3, double start_s = 1.0) {
  Scenario s = default_scenario();
  s.path = PathSpec{};
  s.path.segments = {SegmentSpec{SegmentKind::kLine, length, 0.0, 0.0}};
  const double heading = -e3;
  s.initial_pose = Pose(start_s + e2 * std::sin(heading), -e2 * std::cos(heading), heading);
  s.sensing_radius = 1.0;
  return s;
}

/// The convergence setup: massless stick, no lag, k_omega = omega_max, so the
/// applied yaw rate is the control input.
inline Scenario convergence_scenario(double e2, double e3) {
  Scenario s = straight_scenario(12.0, e2, e3);
  s.vehicle.lag_time_constant = 0.0;
  s.haptics.quasi_static = true;
  s.haptics.k_omega = s.vehicle.max_yaw_rate;
  s.op.kind = OperatorKind::kCompliant;
  s.op.speed_setpoint = 2.0 / 3.0;
  s.mode = ControlMode::kCooperative;
  s.max_duration = 60.0;
  return s;
}

}  // namespace cpf::testing

#pragma once

#include <algorithm>
#include <cmath>

#include "cpf/error_frame.hpp"
#include "cpf/geometry.hpp"

namespace cpf {

template <typename Scalar>
struct ControllerGainsT {
  Scalar alpha = Scalar(1);  // 1/m, translational conversion gain
  Scalar k2 = Scalar(1);     // 1/m^2, lateral CLF weight
  Scalar k3 = Scalar(1);     // 1/rad^2, heading CLF weight
  Scalar c0 = Scalar(1);     // Sontag offset
};

template <typename Scalar>
struct ControlLimitsT {
  Scalar heading_clamp = Scalar(1.2);
  Scalar max_reference_speed = Scalar(0.6);
  Scalar max_yaw_rate = Scalar(1.5);
};

template <typename Scalar>
struct VelocityConversionT {
  Scalar beta = Scalar(0);
  Scalar longitudinal = Scalar(0);
  Scalar lateral = Scalar(0);
};

template <typename Scalar>
struct LieDerivativesT {
  Scalar a = Scalar(0);  // L_f V0
  Scalar b = Scalar(0);  // L_g V0
};

template <typename Scalar>
struct ControlCommandT {
  Scalar speed = Scalar(0);
  Scalar beta = Scalar(0);
  Scalar longitudinal = Scalar(0);
  Scalar lateral = Scalar(0);
  Scalar u = Scalar(0);      // desired yaw rate after saturation
  Scalar u_raw = Scalar(0);  // before saturation
  bool saturated = false;
  Scalar reference_speed = Scalar(0);
  Scalar reference_turn_rate = Scalar(0);
  LieDerivativesT<Scalar> lie;
  Scalar gain = Scalar(0);  // p(e)
};

using ControllerGains = ControllerGainsT<double>;
using ControlLimits = ControlLimitsT<double>;
using ControlCommand = ControlCommandT<double>;

/// Splits the operator's speed into body components, turning the direction of
/// travel toward the path. Under the robot-frame error convention (e2 > 0
/// means the path lies to the left) the angle is +atan(alpha * e2); this is
/// the sign for which L_f V0 < 0 whenever L_g V0 = 0.
template <typename Scalar>
VelocityConversionT<Scalar> velocity_conversion(Scalar speed, Scalar e2,
                                                Scalar alpha) {
  using std::atan;
  using std::cos;
  using std::sin;
  const Scalar beta = atan(alpha * e2);
  return {beta, speed * cos(beta), speed * sin(beta)};
}

/// V0 = K2 e2^2 / 2 + K3 e3^2 / 2.
template <typename Scalar>
Scalar clf_value(Scalar e2, Scalar e3, Scalar k2, Scalar k3) {
  return Scalar(0.5) * k2 * e2 * e2 + Scalar(0.5) * k3 * e3 * e3;
}

/// Drift and input vector fields of the reduced error system
/// d[e2, e3]/dt = f(e) + g(e) u.
template <typename Scalar>
Vector2<Scalar> drift_field(Scalar e3, Scalar speed, Scalar beta,
                            Scalar reference_speed, Scalar reference_turn_rate) {
  using std::sin;
  return {reference_speed * sin(e3) - speed * sin(beta), reference_turn_rate};
}

template <typename Scalar>
Vector2<Scalar> input_field() {
  return {Scalar(0), Scalar(-1)};
}

template <typename Scalar>
LieDerivativesT<Scalar> lie_derivatives(Scalar e2, Scalar e3, Scalar speed,
                                        Scalar beta, Scalar reference_speed,
                                        Scalar reference_turn_rate,
                                        Scalar k2, Scalar k3) {
  const Vector2<Scalar> grad(k2 * e2, k3 * e3);
  return {grad.dot(drift_field(e3, speed, beta, reference_speed,
                               reference_turn_rate)),
          grad.dot(input_field<Scalar>())};
}

inline constexpr double kSontagZeroThreshold = 1e-12;

/// Sontag-type gain p(e). Written so that no cancellation occurs when a < 0.
template <typename Scalar>
Scalar sontag_gain(Scalar a, Scalar b, Scalar c0) {
  using std::abs;
  using std::hypot;
  if (!(abs(b) > Scalar(kSontagZeroThreshold))) return c0;
  const Scalar bb = b * b;
  const Scalar root = hypot(a, bb);
  if (a >= Scalar(0)) return c0 + (a + root) / bb;
  return c0 + bb / (root - a);
}

/// Inverse-optimal heading law u = -p(e) b(e) together with the translational
/// conversion. `errors` must already be gated; `applied_yaw_rate` is the yaw
/// rate applied on the previous tick.
template <typename Scalar>
ControlCommandT<Scalar> control(const ErrorStateT<Scalar>& errors, Scalar speed,
                                Scalar applied_yaw_rate,
                                const ControllerGainsT<Scalar>& gains,
                                const ControlLimitsT<Scalar>& limits = {}) {
  ControlCommandT<Scalar> cmd;
  cmd.speed = speed;
  const auto conv = velocity_conversion(speed, errors.e2, gains.alpha);
  cmd.beta = conv.beta;
  cmd.longitudinal = conv.longitudinal;
  cmd.lateral = conv.lateral;

  cmd.reference_speed =
      reference_speed(speed, conv.beta, errors.e2, errors.e3, applied_yaw_rate,
                      ReferenceSpeedLimits<Scalar>{limits.heading_clamp,
                                                   limits.max_reference_speed});
  cmd.reference_turn_rate =
      reference_turn_rate(errors.curvature, cmd.reference_speed);

  cmd.lie = lie_derivatives(errors.e2, errors.e3, speed, conv.beta,
                            cmd.reference_speed, cmd.reference_turn_rate,
                            gains.k2, gains.k3);
  cmd.gain = sontag_gain(cmd.lie.a, cmd.lie.b, gains.c0);
  cmd.u_raw = -cmd.gain * cmd.lie.b;
  cmd.u = std::clamp(cmd.u_raw, -limits.max_yaw_rate, limits.max_yaw_rate);
  cmd.saturated = cmd.u != cmd.u_raw;
  return cmd;
}

}  // namespace cpf

#pragma once

namespace cpf {

/// Two-axis stick. Lateral axis carries haptics; longitudinal axis is
/// position-commanded.
struct JoystickState {
  double phi_x = 0.0;       // longitudinal deflection, [-1, 1]
  double phi_y = 0.0;       // lateral deflection, [-1, 1]
  double phi_y_rate = 0.0;  // 1/s
  double guidance_force = 0.0;
  double human_force = 0.0;
};

struct HapticGains {
  double kp = 2.0;              // force per unit stick error
  double kd = 0.5;              // force per unit stick rate
  double k_omega = 1.0;         // rad/s per full lateral deflection
  double k_speed = 0.3;         // m/s per full longitudinal deflection
  double stick_mass = 0.05;
  double stick_damping = 0.3;
  double hand_stiffness = 4.0;  // virtual hand for position-mode input
  bool allow_reverse = false;
  /// Massless stick: the lateral axis sits at its force equilibrium each tick.
  bool quasi_static = false;
};

/// omega_d = h(phi_y), linear.
double stick_to_omega(double phi_y, const HapticGains& gains);

/// phi_d = h^-1(u), clamped to the stick range.
double omega_to_stick(double u, const HapticGains& gains);

/// Force the device applies to the stick: pulls phi_y toward phi_d and damps
/// stick motion.
double guidance_force(double phi_y, double phi_d, double phi_y_rate,
                      const HapticGains& gains);

/// Force of a hand holding the stick at `target` with the configured stiffness.
double virtual_hand_force(double target, double phi_y, const HapticGains& gains);

/// Integrates the lateral axis, m phi'' = F + F_human - b phi', with
/// semi-implicit Euler and hard stops at +-1.
JoystickState joystick_step(const JoystickState& state, double guidance,
                            double human, double dt, const HapticGains& gains);

/// Operator speed from the longitudinal axis; forward-only unless reverse is
/// allowed.
double stick_to_speed(double phi_x, const HapticGains& gains);

}  // namespace cpf

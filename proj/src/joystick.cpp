#include "cpf/joystick.hpp"

#include <algorithm>
#include <stdexcept>

namespace cpf {

double stick_to_omega(double phi_y, const HapticGains& gains) {
  return gains.k_omega * phi_y;
}

double omega_to_stick(double u, const HapticGains& gains) {
  return std::clamp(u / gains.k_omega, -1.0, 1.0);
}

double guidance_force(double phi_y, double phi_d, double phi_y_rate,
                      const HapticGains& gains) {
  return gains.kp * (phi_d - phi_y) - gains.kd * phi_y_rate;
}

double virtual_hand_force(double target, double phi_y, const HapticGains& gains) {
  return gains.hand_stiffness * (std::clamp(target, -1.0, 1.0) - phi_y);
}

JoystickState joystick_step(const JoystickState& state, double guidance,
                            double human, double dt, const HapticGains& gains) {
  if (!(dt > 0.0 && dt <= 0.1)) {
    throw std::invalid_argument("joystick step: dt must lie in (0, 0.1]");
  }
  JoystickState next = state;
  next.guidance_force = guidance;
  next.human_force = human;
  const double accel =
      (guidance + human - gains.stick_damping * state.phi_y_rate) / gains.stick_mass;
  next.phi_y_rate = state.phi_y_rate + dt * accel;
  next.phi_y = state.phi_y + dt * next.phi_y_rate;
  if (next.phi_y >= 1.0 || next.phi_y <= -1.0) {
    next.phi_y = std::clamp(next.phi_y, -1.0, 1.0);
    next.phi_y_rate = 0.0;
  }
  return next;
}

double stick_to_speed(double phi_x, const HapticGains& gains) {
  const double deflection = gains.allow_reverse ? phi_x : std::max(phi_x, 0.0);
  return gains.k_speed * deflection;
}

}  // namespace cpf

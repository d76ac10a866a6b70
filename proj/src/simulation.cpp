#include "cpf/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <type_traits>

#include "cpf/controller.hpp"
#include "cpf/error_frame.hpp"

namespace cpf {
namespace {

struct HumanInput {
  bool position_mode = false;
  double value = 0.0;  // force, or stick target in position mode
};

HumanInput human_input(const OperatorAction& action) {
  return std::visit(
      [](const auto& lateral) {
        using T = std::decay_t<decltype(lateral)>;
        return HumanInput{std::is_same_v<T, LateralPosition>, lateral.value};
      },
      action.lateral);
}

// Massless stick: lateral deflection where guidance and hand forces balance.
double equilibrium_deflection(double current, double phi_d, bool guidance_on,
                              const HumanInput& human, const HapticGains& gains) {
  const double kp = guidance_on ? gains.kp : 0.0;
  double phi = current;
  if (human.position_mode) {
    phi = (kp * phi_d + gains.hand_stiffness * std::clamp(human.value, -1.0, 1.0)) /
          (kp + gains.hand_stiffness);
  } else if (kp > 0.0) {
    phi = phi_d + human.value / kp;
  } else if (human.value != 0.0) {
    phi = human.value > 0.0 ? 1.0 : -1.0;
  }
  return std::clamp(phi, -1.0, 1.0);
}

bool finite(const Pose& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.heading);
}

}  // namespace

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kRunning:
      return "running";
    case RunStatus::kCompleted:
      return "completed";
    case RunStatus::kTimeout:
      return "timeout";
    case RunStatus::kAborted:
      return "aborted";
  }
  return "unknown";
}

Simulator::Simulator(Scenario scenario)
    : Simulator(scenario, make_operator(scenario.op)) {}

Simulator::Simulator(Scenario scenario, std::unique_ptr<Operator> op)
    : scenario_(std::move(scenario)),
      path_(build_path(scenario_.path)),
      operator_(std::move(op)),
      mode_(scenario_.mode) {
  validate(scenario_);
  vehicle_.pose = scenario_.initial_pose.value_or(scenario_.path.start);
  max_ticks_ = std::llround(scenario_.max_duration / scenario_.dt);
  record_.scenario_hash = scenario_hash(scenario_);
  record_.seed = scenario_.seed;
  record_.dt = scenario_.dt;
  record_.rows.reserve(static_cast<std::size_t>(std::min<std::int64_t>(max_ticks_, 200000)));
}

void Simulator::set_mode(ControlMode mode) {
  if (mode != mode_) add_event("mode_set:" + to_string(mode));
  mode_ = mode;
}

void Simulator::add_event(std::string event) { pending_events_.push_back(std::move(event)); }

void Simulator::abort(const std::string& diagnostic) {
  record_.status = RunStatus::kAborted;
  record_.diagnostic = diagnostic;
}

RunStatus Simulator::run_to_end() {
  while (step() == RunStatus::kRunning) {
  }
  return record_.status;
}

RunStatus Simulator::step() {
  if (record_.status != RunStatus::kRunning) return record_.status;
  if (tick_ >= max_ticks_) {
    record_.status = RunStatus::kTimeout;
    return record_.status;
  }
  const double dt = scenario_.dt;
  const HapticGains& haptics = scenario_.haptics;
  const bool cooperative = mode_ == ControlMode::kCooperative;

  TickRow row;
  row.tick = tick_;
  row.t = static_cast<double>(tick_) * dt;
  row.pose = vehicle_.pose;
  row.mode = mode_;
  row.events = std::move(pending_events_);
  pending_events_.clear();

  // Sensing and error frame.
  const PathPoint nearest = project(path_, vehicle_.pose);
  const bool detected =
      nearest.distance <= scenario_.sensing_radius && !nearest.in_gap;
  const PathPoint reference =
      reference_on_lateral_axis(path_, vehicle_.pose).value_or(nearest);
  const Vector3<double> e = compute_errors(vehicle_.pose, reference.pose);
  ErrorState errors;
  errors.e1 = e(0);
  errors.e2 = e(1);
  errors.e3 = e(2);
  errors.curvature = reference.curvature;
  errors.detected = detected;
  const ErrorState gated = gate(errors, detected, override_);
  if (detected != last_detected_) row.events.push_back(detected ? "path_found" : "path_lost");
  last_detected_ = detected;

  row.s = nearest.s;
  row.e1 = errors.e1;
  row.e2 = errors.e2;
  row.e3 = errors.e3;
  row.gated_e2 = gated.e2;
  row.gated_e3 = gated.e3;
  row.detected = detected;
  row.override_active = override_;

  // Controller and haptic guidance.
  double beta = 0.0;
  double phi_d = 0.0;
  double guidance = 0.0;
  if (cooperative) {
    const double speed_now = stick_to_speed(stick_.phi_x, haptics);
    const ControlCommand cmd =
        control(gated, speed_now, vehicle_.realized.yaw_rate, scenario_.controller,
                scenario_.control_limits());
    beta = cmd.beta;
    row.u = cmd.u;
    row.u_saturated = cmd.saturated;
    row.reference_speed = cmd.reference_speed;
    row.reference_turn_rate = cmd.reference_turn_rate;
    phi_d = omega_to_stick(cmd.u, haptics);
    guidance = guidance_force(stick_.phi_y, phi_d, stick_.phi_y_rate, haptics);
  }
  row.beta = beta;
  row.phi_d = phi_d;
  row.guidance_force = guidance;

  // Operator.
  Observation obs;
  obs.tick = tick_;
  obs.t = row.t;
  obs.dt = dt;
  obs.e2 = errors.e2;
  obs.e3 = errors.e3;
  obs.curvature = errors.curvature;
  obs.detected = detected;
  obs.assist_active = cooperative && detected && !override_;
  obs.phi_y = stick_.phi_y;
  const OperatorAction action = operator_->act(obs);
  if (action.override_button != override_) {
    row.events.push_back(action.override_button ? "override_on" : "override_off");
  }
  override_ = action.override_button;

  // Stick.
  const HumanInput human = human_input(action);
  stick_.phi_x = std::clamp(action.phi_x_cmd, -1.0, 1.0);
  const double human_force = human.position_mode
                                 ? virtual_hand_force(human.value, stick_.phi_y, haptics)
                                 : human.value;
  if (haptics.quasi_static) {
    stick_.phi_y =
        equilibrium_deflection(stick_.phi_y, phi_d, cooperative, human, haptics);
    stick_.phi_y_rate = 0.0;
    stick_.guidance_force = guidance;
    stick_.human_force = human_force;
  } else {
    stick_ = joystick_step(stick_, guidance, human_force, dt, haptics);
  }
  row.phi_x = stick_.phi_x;
  row.phi_y = stick_.phi_y;
  row.human_force = human_force;

  // Vehicle.
  const double speed = stick_to_speed(stick_.phi_x, haptics);
  const double omega_d = stick_to_omega(stick_.phi_y, haptics);
  row.speed = speed;
  row.omega_d = omega_d;
  BodyVelocity body;
  body.longitudinal = cooperative ? speed * std::cos(beta) : speed;
  body.lateral = cooperative ? speed * std::sin(beta) : 0.0;
  body.yaw_rate = omega_d;

  const bool finite_errors = std::isfinite(errors.e2) && std::isfinite(errors.e3);
  try {
    if (!finite_errors) throw std::invalid_argument("non-finite path errors");
    bool saturated = false;
    vehicle_ = cpf::step(vehicle_, body, dt, scenario_.vehicle, &saturated);
    row.command_saturated = saturated;
    if (!finite(vehicle_.pose)) throw std::invalid_argument("non-finite pose after step");
  } catch (const std::invalid_argument& e) {
    record_.rows.push_back(std::move(row));
    abort(std::string("tick ") + std::to_string(tick_) + ": " + e.what());
    return record_.status;
  }

  record_.rows.push_back(std::move(row));
  ++tick_;
  if (nearest.s >= path_.total_length() - kCompletionEpsilon) {
    record_.status = RunStatus::kCompleted;
  }
  return record_.status;
}

RunRecord run(const Scenario& scenario) {
  Simulator sim(scenario);
  sim.run_to_end();
  return sim.take_record();
}

Metrics compute_metrics(const RunRecord& record) {
  if (record.rows.empty()) throw std::invalid_argument("cannot compute metrics of an empty record");
  double sum_e2 = 0.0;
  double sum_e3 = 0.0;
  std::size_t lost = 0;
  std::size_t saturated = 0;
  for (const TickRow& row : record.rows) {
    sum_e2 += row.e2 * row.e2;
    sum_e3 += row.e3 * row.e3;
    if (!row.detected) ++lost;
    if (row.u_saturated || row.command_saturated) ++saturated;
  }
  const auto n = static_cast<double>(record.rows.size());
  Metrics m;
  m.rmse_e2 = std::sqrt(sum_e2 / n);
  m.rmse_e3 = std::sqrt(sum_e3 / n);
  m.completion_time = record.status == RunStatus::kCompleted
                          ? record.rows.back().t
                          : n * record.dt;
  m.path_lost_fraction = static_cast<double>(lost) / n;
  m.saturation_fraction = static_cast<double>(saturated) / n;
  m.status = record.status;
  return m;
}

}  // namespace cpf

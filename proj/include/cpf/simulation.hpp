#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cpf/joystick.hpp"
#include "cpf/operators.hpp"
#include "cpf/path.hpp"
#include "cpf/scenario.hpp"
#include "cpf/vehicle.hpp"

namespace cpf {

enum class RunStatus { kRunning, kCompleted, kTimeout, kAborted };

std::string to_string(RunStatus status);

/// One simulation tick: state at the start of the tick and everything the
/// pipeline computed from it.
struct TickRow {
  std::int64_t tick = 0;
  double t = 0.0;
  Pose pose;
  double s = 0.0;  // arclength of the nearest path point
  double e1 = 0.0;
  double e2 = 0.0;
  double e3 = 0.0;
  double gated_e2 = 0.0;
  double gated_e3 = 0.0;
  bool detected = false;
  bool override_active = false;
  ControlMode mode = ControlMode::kCooperative;
  double beta = 0.0;
  double u = 0.0;
  double phi_x = 0.0;  // after the operator's input this tick
  double phi_y = 0.0;
  double phi_d = 0.0;
  double guidance_force = 0.0;
  double human_force = 0.0;
  double speed = 0.0;  // V from the longitudinal axis
  double reference_speed = 0.0;
  double reference_turn_rate = 0.0;
  double omega_d = 0.0;
  bool u_saturated = false;
  bool command_saturated = false;
  std::vector<std::string> events;
};

struct RunRecord {
  std::string scenario_hash;
  std::uint64_t seed = 0;
  double dt = 0.0;
  std::vector<TickRow> rows;
  RunStatus status = RunStatus::kRunning;
  std::string diagnostic;
};

struct Metrics {
  double rmse_e2 = 0.0;
  double rmse_e3 = 0.0;
  double completion_time = 0.0;
  double path_lost_fraction = 0.0;
  double saturation_fraction = 0.0;
  RunStatus status = RunStatus::kRunning;
};

/// Fixed-step closed loop: path, vehicle, error frame, controller, joystick
/// and operator, advanced one tick per `step()`.
class Simulator {
 public:
  explicit Simulator(Scenario scenario);
  Simulator(Scenario scenario, std::unique_ptr<Operator> op);

  /// Runs one tick unless the run has already ended. Returns the status.
  RunStatus step();
  /// Steps until the run ends.
  RunStatus run_to_end();

  RunStatus status() const { return record_.status; }
  std::int64_t tick() const { return tick_; }
  double time() const { return static_cast<double>(tick_) * scenario_.dt; }
  ControlMode mode() const { return mode_; }
  void set_mode(ControlMode mode);
  /// Attaches an event label to the next recorded row.
  void add_event(std::string event);

  const Scenario& scenario() const { return scenario_; }
  const PathModel& path() const { return path_; }
  const VehicleState& vehicle() const { return vehicle_; }
  const JoystickState& stick() const { return stick_; }
  const RunRecord& record() const { return record_; }
  RunRecord take_record() { return std::move(record_); }
  Operator& op() { return *operator_; }

 private:
  void abort(const std::string& diagnostic);

  Scenario scenario_;
  PathModel path_;
  std::unique_ptr<Operator> operator_;
  VehicleState vehicle_;
  JoystickState stick_;
  ControlMode mode_;
  bool override_ = false;
  bool last_detected_ = true;
  std::int64_t tick_ = 0;
  std::int64_t max_ticks_ = 0;
  std::vector<std::string> pending_events_;
  RunRecord record_;
};

/// Complete run with the scenario's configured operator.
RunRecord run(const Scenario& scenario);

/// Throws std::invalid_argument on an empty record.
Metrics compute_metrics(const RunRecord& record);

}  // namespace cpf

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cpf/controller.hpp"
#include "cpf/joystick.hpp"
#include "cpf/operators.hpp"
#include "cpf/path.hpp"
#include "cpf/vehicle.hpp"

namespace cpf {

enum class ControlMode { kManual, kCooperative };

std::string to_string(ControlMode mode);  // "MC" / "CC"
ControlMode control_mode_from_string(const std::string& name);

/// Invalid scenario content. `what()` names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  PathSpec path;  // segments, gaps and inspection objects
  VehicleLimits vehicle;
  std::optional<Pose> initial_pose;  // defaults to the path start
  ControllerGains controller;
  double heading_clamp = 1.2;  // rad, |e3| bound in the reference-speed formula
  HapticGains haptics;
  OperatorParams op;
  ControlMode mode = ControlMode::kCooperative;
  double dt = 0.01;
  double max_duration = 120.0;
  double sensing_radius = 0.5;
  std::uint64_t seed = 1;

  /// Reference speed bound, twice the vehicle speed limit.
  double max_reference_speed() const { return 2.0 * vehicle.max_speed; }
  ControlLimits control_limits() const {
    return {heading_clamp, max_reference_speed(), vehicle.max_yaw_rate};
  }
};

inline constexpr double kCompletionEpsilon = 0.05;  // m before the path end

/// Parses and validates. Unknown keys are rejected.
Scenario scenario_from_json(const nlohmann::json& doc);
Scenario load_scenario_file(const std::filesystem::path& file);
/// Throws ConfigError when an invariant does not hold.
void validate(const Scenario& scenario);

nlohmann::json to_json(const Scenario& scenario);
/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string scenario_hash(const Scenario& scenario);

/// U-shaped course within a 5.4 x 2.7 m pool: two long straights joined by two
/// quarter circles and a short straight, with three 0.3 m detection gaps.
Scenario default_scenario();

}  // namespace cpf

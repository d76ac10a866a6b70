#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cpf/scenario.hpp"

namespace cpf::teleop {

inline constexpr int kProtocolVersion = 1;

// Inbound (client -> server).
struct StickInput {
  double phi_x = 0.0;
  double phi_y = 0.0;
  bool operator==(const StickInput&) const = default;
};
struct OverrideInput {
  bool value = false;
  bool operator==(const OverrideInput&) const = default;
};
struct ResetInput {
  bool operator==(const ResetInput&) const = default;
};
struct ModeSetInput {
  ControlMode mode = ControlMode::kCooperative;
  bool operator==(const ModeSetInput&) const = default;
};
struct CountSubmitInput {
  std::int64_t count = 0;
  bool operator==(const CountSubmitInput&) const = default;
};
struct HelloInput {
  std::string client;
  bool operator==(const HelloInput&) const = default;
};

using InputPayload = std::variant<StickInput, OverrideInput, ResetInput, ModeSetInput,
                                  CountSubmitInput, HelloInput>;

struct InputMessage {
  std::optional<std::int64_t> seq;
  InputPayload payload;
  bool operator==(const InputMessage&) const = default;
};

// Outbound (server -> client).
struct ObjectInView {
  double s = 0.0;
  double offset = 0.0;
  std::int64_t slit_count = 0;
  double x = 0.0;
  double y = 0.0;
  bool operator==(const ObjectInView&) const = default;
};

struct StateSnapshot {
  std::int64_t session = 0;
  std::int64_t tick = 0;
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;
  double e3 = 0.0;
  bool detected = false;
  bool override_active = false;
  double beta = 0.0;
  double u = 0.0;
  double phi_x = 0.0;
  double phi_y = 0.0;
  double phi_d = 0.0;
  double force = 0.0;
  double speed = 0.0;
  ControlMode mode = ControlMode::kCooperative;
  std::string status;  // running | paused | completed | timeout | aborted
  std::vector<ObjectInView> objects;
  std::optional<std::int64_t> last_input_seq;
  std::int64_t last_input_received_tick = -1;
  std::int64_t last_input_applied_tick = -1;
  bool operator==(const StateSnapshot&) const = default;
};

struct ErrorFrame {
  std::string code;  // bad_json | bad_version | bad_message | unknown_kind | read_only
  std::string message;
  bool operator==(const ErrorFrame&) const = default;
};

struct Welcome {
  std::string role;  // driver | observer
  std::string scenario_hash;
  bool operator==(const Welcome&) const = default;
};

using OutboundMessage = std::variant<StateSnapshot, ErrorFrame, Welcome>;

/// Decoding failure carrying the error frame to send back.
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(ErrorFrame frame)
      : std::runtime_error(frame.message), frame_(std::move(frame)) {}
  const ErrorFrame& frame() const { return frame_; }

 private:
  ErrorFrame frame_;
};

std::string encode(const InputMessage& message);
std::string encode(const OutboundMessage& message);

/// Stick values are clamped to [-1, 1]; unknown fields are ignored.
InputMessage decode_input(std::string_view text);
OutboundMessage decode_output(std::string_view text);

std::string kind_name(const InputPayload& payload);

}  // namespace cpf::teleop

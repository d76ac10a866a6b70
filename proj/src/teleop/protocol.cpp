#include "cpf/teleop/protocol.hpp"

#include <algorithm>

#include <json.hpp>

namespace cpf::teleop {

using nlohmann::json;

namespace {

[[noreturn]] void reject(const std::string& code, const std::string& message) {
  throw ProtocolError(ErrorFrame{code, message});
}

json parse_object(std::string_view text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) reject("bad_json", "frame is not valid JSON");
  if (!doc.is_object()) reject("bad_message", "frame must be a JSON object");
  return doc;
}

void check_version(const json& doc) {
  if (!doc.contains("v")) reject("bad_version", "missing schema version field \"v\"");
  const json& v = doc.at("v");
  if (!v.is_number_integer() || v.get<std::int64_t>() != kProtocolVersion) {
    reject("bad_version", "unsupported protocol version " + v.dump());
  }
}

double number_field(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_number()) {
    reject("bad_message", std::string("field \"") + key + "\" must be a number");
  }
  return doc.at(key).get<double>();
}

std::int64_t integer_field(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_number_integer()) {
    reject("bad_message", std::string("field \"") + key + "\" must be an integer");
  }
  return doc.at(key).get<std::int64_t>();
}

bool bool_field(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_boolean()) {
    reject("bad_message", std::string("field \"") + key + "\" must be a boolean");
  }
  return doc.at(key).get<bool>();
}

std::string string_field(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_string()) {
    reject("bad_message", std::string("field \"") + key + "\" must be a string");
  }
  return doc.at(key).get<std::string>();
}

ControlMode mode_field(const json& doc, const char* key) {
  const std::string name = string_field(doc, key);
  if (name == "MC") return ControlMode::kManual;
  if (name == "CC") return ControlMode::kCooperative;
  reject("bad_message", "mode must be \"MC\" or \"CC\"");
}

struct PayloadEncoder {
  json& out;
  void operator()(const StickInput& m) const {
    out["kind"] = "stick";
    out["phi_x"] = m.phi_x;
    out["phi_y"] = m.phi_y;
  }
  void operator()(const OverrideInput& m) const {
    out["kind"] = "override";
    out["value"] = m.value;
  }
  void operator()(const ResetInput&) const { out["kind"] = "reset"; }
  void operator()(const ModeSetInput& m) const {
    out["kind"] = "mode_set";
    out["mode"] = to_string(m.mode);
  }
  void operator()(const CountSubmitInput& m) const {
    out["kind"] = "count_submit";
    out["count"] = m.count;
  }
  void operator()(const HelloInput& m) const {
    out["kind"] = "hello";
    out["client"] = m.client;
  }
};

json snapshot_json(const StateSnapshot& s) {
  json objects = json::array();
  for (const auto& o : s.objects) {
    objects.push_back({{"s", o.s},
                       {"offset", o.offset},
                       {"slit_count", o.slit_count},
                       {"x", o.x},
                       {"y", o.y}});
  }
  json out = {{"v", kProtocolVersion},
              {"type", "snapshot"},
              {"session", s.session},
              {"tick", s.tick},
              {"t", s.t},
              {"pose", {{"x", s.x}, {"y", s.y}, {"theta", s.theta}}},
              {"errors", {{"e1", s.e1}, {"e2", s.e2}, {"e3", s.e3}}},
              {"detected", s.detected},
              {"override", s.override_active},
              {"beta", s.beta},
              {"u", s.u},
              {"phi_x", s.phi_x},
              {"phi_y", s.phi_y},
              {"phi_d", s.phi_d},
              {"F", s.force},
              {"V", s.speed},
              {"mode", to_string(s.mode)},
              {"status", s.status},
              {"objects", objects},
              {"last_input_received_tick", s.last_input_received_tick},
              {"last_input_applied_tick", s.last_input_applied_tick}};
  out["last_input_seq"] = s.last_input_seq ? json(*s.last_input_seq) : json(nullptr);
  return out;
}

StateSnapshot snapshot_from_json(const json& doc) {
  StateSnapshot s;
  s.session = integer_field(doc, "session");
  s.tick = integer_field(doc, "tick");
  s.t = number_field(doc, "t");
  const json& pose = doc.at("pose");
  s.x = number_field(pose, "x");
  s.y = number_field(pose, "y");
  s.theta = number_field(pose, "theta");
  const json& errors = doc.at("errors");
  s.e1 = number_field(errors, "e1");
  s.e2 = number_field(errors, "e2");
  s.e3 = number_field(errors, "e3");
  s.detected = bool_field(doc, "detected");
  s.override_active = bool_field(doc, "override");
  s.beta = number_field(doc, "beta");
  s.u = number_field(doc, "u");
  s.phi_x = number_field(doc, "phi_x");
  s.phi_y = number_field(doc, "phi_y");
  s.phi_d = number_field(doc, "phi_d");
  s.force = number_field(doc, "F");
  s.speed = number_field(doc, "V");
  s.mode = mode_field(doc, "mode");
  s.status = string_field(doc, "status");
  for (const json& o : doc.at("objects")) {
    s.objects.push_back({number_field(o, "s"), number_field(o, "offset"),
                         integer_field(o, "slit_count"), number_field(o, "x"),
                         number_field(o, "y")});
  }
  if (doc.contains("last_input_seq") && !doc.at("last_input_seq").is_null()) {
    s.last_input_seq = integer_field(doc, "last_input_seq");
  }
  s.last_input_received_tick = integer_field(doc, "last_input_received_tick");
  s.last_input_applied_tick = integer_field(doc, "last_input_applied_tick");
  return s;
}

}  // namespace

std::string kind_name(const InputPayload& payload) {
  json tmp;
  std::visit(PayloadEncoder{tmp}, payload);
  return tmp.at("kind").get<std::string>();
}

std::string encode(const InputMessage& message) {
  json out = {{"v", kProtocolVersion}};
  if (message.seq) out["seq"] = *message.seq;
  std::visit(PayloadEncoder{out}, message.payload);
  return out.dump();
}

std::string encode(const OutboundMessage& message) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, StateSnapshot>) {
          return snapshot_json(m).dump();
        } else if constexpr (std::is_same_v<T, ErrorFrame>) {
          return json{{"v", kProtocolVersion},
                      {"type", "error"},
                      {"code", m.code},
                      {"message", m.message},
                      {"supported_versions", json::array({kProtocolVersion})}}
              .dump();
        } else {
          return json{{"v", kProtocolVersion},
                      {"type", "welcome"},
                      {"role", m.role},
                      {"scenario_hash", m.scenario_hash},
                      {"supported_versions", json::array({kProtocolVersion})}}
              .dump();
        }
      },
      message);
}

InputMessage decode_input(std::string_view text) {
  const json doc = parse_object(text);
  check_version(doc);
  if (!doc.contains("kind")) reject("bad_message", "missing field \"kind\"");
  const std::string kind = string_field(doc, "kind");

  InputMessage out;
  if (doc.contains("seq")) out.seq = integer_field(doc, "seq");
  if (kind == "stick") {
    out.payload = StickInput{std::clamp(number_field(doc, "phi_x"), -1.0, 1.0),
                             std::clamp(number_field(doc, "phi_y"), -1.0, 1.0)};
  } else if (kind == "override") {
    out.payload = OverrideInput{bool_field(doc, "value")};
  } else if (kind == "reset") {
    out.payload = ResetInput{};
  } else if (kind == "mode_set") {
    out.payload = ModeSetInput{mode_field(doc, "mode")};
  } else if (kind == "count_submit") {
    out.payload = CountSubmitInput{integer_field(doc, "count")};
  } else if (kind == "hello") {
    out.payload = HelloInput{doc.contains("client") ? string_field(doc, "client") : ""};
  } else {
    reject("unknown_kind", "unknown message kind \"" + kind + "\"");
  }
  return out;
}

OutboundMessage decode_output(std::string_view text) {
  const json doc = parse_object(text);
  check_version(doc);
  const std::string type = string_field(doc, "type");
  try {
    if (type == "snapshot") return snapshot_from_json(doc);
    if (type == "error") {
      return ErrorFrame{string_field(doc, "code"), string_field(doc, "message")};
    }
    if (type == "welcome") {
      return Welcome{string_field(doc, "role"), string_field(doc, "scenario_hash")};
    }
  } catch (const json::exception& e) {
    reject("bad_message", e.what());
  }
  reject("unknown_kind", "unknown message type \"" + type + "\"");
}

}  // namespace cpf::teleop

#include "cpf/teleop/session.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace cpf::teleop {

using nlohmann::json;

TeleopSession::TeleopSession(Scenario scenario) : scenario_(std::move(scenario)) {
  validate(scenario_);
  start_run();
}

void TeleopSession::start_run() {
  auto held = std::make_unique<HeldInputOperator>();
  held_ = held.get();
  sim_ = std::make_unique<Simulator>(scenario_, std::move(held));
  trace_ = InputTrace{};
  trace_.scenario_hash = sim_->record().scenario_hash;
  last_seq_.reset();
  last_received_tick_ = -1;
  last_applied_tick_ = -1;
  input_pending_ = false;
}

SessionResult TeleopSession::close_run() {
  SessionResult result;
  result.index = index_;
  trace_.total_ticks = static_cast<std::int64_t>(sim_->record().rows.size());
  trace_.status = to_string(sim_->status());
  result.trace = trace_;
  result.record = sim_->record();
  return result;
}

void TeleopSession::apply(const InputMessage& message) {
  if (std::holds_alternative<ResetInput>(message.payload)) {
    finished_.push_back(close_run());
    ++index_;
    start_run();
    return;
  }
  trace_.entries.push_back({sim_->tick(), message});
  if (message.seq) last_seq_ = message.seq;
  last_received_tick_ = sim_->tick();
  input_pending_ = true;

  std::visit(
      [this](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, StickInput>) {
          OperatorAction action = held_->current();
          action.phi_x_cmd = std::clamp(m.phi_x, -1.0, 1.0);
          action.lateral = LateralPosition{std::clamp(m.phi_y, -1.0, 1.0)};
          held_->set(action);
        } else if constexpr (std::is_same_v<T, OverrideInput>) {
          OperatorAction action = held_->current();
          action.override_button = m.value;
          held_->set(action);
        } else if constexpr (std::is_same_v<T, ModeSetInput>) {
          sim_->set_mode(m.mode);
        } else if constexpr (std::is_same_v<T, CountSubmitInput>) {
          sim_->add_event("count_submit:" + std::to_string(m.count));
        }
      },
      message.payload);
}

RunStatus TeleopSession::step() {
  if (sim_->status() != RunStatus::kRunning) return sim_->status();
  if (input_pending_) {
    last_applied_tick_ = sim_->tick();
    input_pending_ = false;
  }
  return sim_->step();
}

StateSnapshot TeleopSession::snapshot() const {
  StateSnapshot s;
  s.session = index_;
  s.tick = sim_->tick();
  s.t = sim_->time();
  const Pose& pose = sim_->vehicle().pose;
  s.x = pose.x();
  s.y = pose.y();
  s.theta = pose.heading;
  s.mode = sim_->mode();
  s.phi_x = sim_->stick().phi_x;
  s.phi_y = sim_->stick().phi_y;
  if (!sim_->record().rows.empty()) {
    const TickRow& row = sim_->record().rows.back();
    s.e1 = row.e1;
    s.e2 = row.e2;
    s.e3 = row.e3;
    s.detected = row.detected;
    s.override_active = row.override_active;
    s.beta = row.beta;
    s.u = row.u;
    s.phi_d = row.phi_d;
    s.force = row.guidance_force;
    s.speed = row.speed;
  }
  s.status = to_string(sim_->status());
  s.objects = objects_in_view(sim_->path(), pose, scenario_.sensing_radius);
  s.last_input_seq = last_seq_;
  s.last_input_received_tick = last_received_tick_;
  s.last_input_applied_tick = last_applied_tick_;
  return s;
}

std::vector<SessionResult> TeleopSession::take_finished() {
  return std::exchange(finished_, {});
}

SessionResult TeleopSession::finish() { return close_run(); }

RunRecord replay(const Scenario& scenario, const InputTrace& trace) {
  TeleopSession session(scenario);
  if (session.trace().scenario_hash != trace.scenario_hash) {
    throw std::invalid_argument("trace was recorded against scenario " + trace.scenario_hash +
                                ", not " + session.trace().scenario_hash);
  }
  auto next = trace.entries.begin();
  auto rows = [&] { return static_cast<std::int64_t>(session.sim().record().rows.size()); };
  while (rows() < trace.total_ticks) {
    while (next != trace.entries.end() && next->tick <= session.sim().tick()) {
      session.apply(next->message);
      ++next;
    }
    if (session.step() != RunStatus::kRunning) break;
  }
  // A timeout is only noticed by the step after the last row.
  if (trace.status == to_string(RunStatus::kTimeout)) session.step();
  return session.sim().record();
}

void write_trace_jsonl(const InputTrace& trace, std::ostream& out) {
  out << json{{"type", "header"},
              {"format", "cpf-input-trace"},
              {"version", 1},
              {"scenario_hash", trace.scenario_hash}}
             .dump()
      << '\n';
  for (const TraceEntry& entry : trace.entries) {
    json line = {{"tick", entry.tick}, {"message", json::parse(encode(entry.message))}};
    out << line.dump() << '\n';
  }
  out << json{{"type", "footer"}, {"ticks", trace.total_ticks}, {"status", trace.status}}.dump()
      << '\n';
}

std::string trace_jsonl(const InputTrace& trace) {
  std::ostringstream out;
  write_trace_jsonl(trace, out);
  return out.str();
}

InputTrace read_trace_jsonl(std::istream& in) {
  InputTrace trace;
  std::string line;
  int number = 0;
  bool header = false;
  bool footer = false;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw std::runtime_error("trace line " + std::to_string(number) + ": " + why);
    };
    const json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) fail("malformed JSON");
    try {
      const std::string type = doc.value("type", "");
      if (type == "header") {
        if (doc.at("format") != "cpf-input-trace") fail("not an input trace");
        trace.scenario_hash = doc.at("scenario_hash").get<std::string>();
        header = true;
      } else if (type == "footer") {
        trace.total_ticks = doc.at("ticks").get<std::int64_t>();
        trace.status = doc.at("status").get<std::string>();
        footer = true;
      } else {
        trace.entries.push_back(
            {doc.at("tick").get<std::int64_t>(), decode_input(doc.at("message").dump())});
      }
    } catch (const json::exception& e) {
      fail(e.what());
    } catch (const ProtocolError& e) {
      fail(e.what());
    }
  }
  if (!header || !footer) throw std::runtime_error("trace is missing its header or footer");
  return trace;
}

std::vector<ObjectInView> objects_in_view(const PathModel& path, const Pose& pose,
                                          double radius) {
  std::vector<ObjectInView> out;
  for (const InspectionObject& object : path.objects()) {
    const Vector2<double> where = path.object_position(object);
    if ((where - pose.position).norm() > radius) continue;
    out.push_back({object.s, object.lateral_offset, object.slit_count, where.x(), where.y()});
  }
  return out;
}

}  // namespace cpf::teleop

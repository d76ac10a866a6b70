#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cpf/scenario.hpp"
#include "cpf/simulation.hpp"
#include "cpf/teleop/protocol.hpp"

namespace cpf::teleop {

/// An input applied immediately before sim tick `tick`.
struct TraceEntry {
  std::int64_t tick = 0;
  InputMessage message;
  bool operator==(const TraceEntry&) const = default;
};

struct InputTrace {
  std::string scenario_hash;
  std::vector<TraceEntry> entries;
  std::int64_t total_ticks = 0;  // rows recorded in the session
  std::string status;
  bool operator==(const InputTrace&) const = default;
};

/// One finished session: everything needed to persist it and replay it.
struct SessionResult {
  std::int64_t index = 0;
  RunRecord record;
  InputTrace trace;
};

/// The sim side of a teleop session, with no networking. Inputs are applied
/// between ticks and logged against the tick they precede, so a live session
/// and its replay take the same code path.
class TeleopSession {
 public:
  explicit TeleopSession(Scenario scenario);

  /// Applies one inbound message. A reset finishes the current run (see
  /// `take_finished`) and starts a fresh one from the scenario start.
  void apply(const InputMessage& message);
  RunStatus step();

  StateSnapshot snapshot() const;
  std::int64_t index() const { return index_; }
  const Simulator& sim() const { return *sim_; }
  const Scenario& scenario() const { return scenario_; }
  const InputTrace& trace() const { return trace_; }

  /// Runs finished by resets since the last call.
  std::vector<SessionResult> take_finished();
  /// Ends the current run and returns it (used on shutdown).
  SessionResult finish();

 private:
  void start_run();
  SessionResult close_run();

  Scenario scenario_;
  std::unique_ptr<Simulator> sim_;
  HeldInputOperator* held_ = nullptr;  // owned by sim_
  InputTrace trace_;
  std::int64_t index_ = 0;
  std::vector<SessionResult> finished_;
  std::optional<std::int64_t> last_seq_;
  std::int64_t last_received_tick_ = -1;
  std::int64_t last_applied_tick_ = -1;
  bool input_pending_ = false;
};

/// Re-runs a recorded session headlessly.
RunRecord replay(const Scenario& scenario, const InputTrace& trace);

void write_trace_jsonl(const InputTrace& trace, std::ostream& out);
std::string trace_jsonl(const InputTrace& trace);
/// Throws std::runtime_error naming the offending line.
InputTrace read_trace_jsonl(std::istream& in);

/// Objects whose world position lies within `radius` of `pose`.
std::vector<ObjectInView> objects_in_view(const PathModel& path, const Pose& pose,
                                          double radius);

}  // namespace cpf::teleop

#include "cpf/record_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace cpf {

using nlohmann::json;

std::string format_number(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

json row_to_json(const TickRow& row) {
  json out = {
      {"tick", row.tick},
      {"t", row.t},
      {"x", row.pose.x()},
      {"y", row.pose.y()},
      {"theta", row.pose.heading},
      {"s", row.s},
      {"e1", row.e1},
      {"e2", row.e2},
      {"e3", row.e3},
      {"gated_e2", row.gated_e2},
      {"gated_e3", row.gated_e3},
      {"detected", row.detected},
      {"override", row.override_active},
      {"mode", to_string(row.mode)},
      {"beta", row.beta},
      {"u", row.u},
      {"phi_x", row.phi_x},
      {"phi_y", row.phi_y},
      {"phi_d", row.phi_d},
      {"F", row.guidance_force},
      {"F_human", row.human_force},
      {"V", row.speed},
      {"V_r", row.reference_speed},
      {"omega_r", row.reference_turn_rate},
      {"omega_d", row.omega_d},
      {"u_saturated", row.u_saturated},
      {"cmd_saturated", row.command_saturated},
  };
  if (!row.events.empty()) out["events"] = row.events;
  return out;
}

void write_run_jsonl(const RunRecord& record, std::ostream& out) {
  const json header = {{"type", "header"},
                       {"format", "cpf-run-record"},
                       {"version", 1},
                       {"scenario_hash", record.scenario_hash},
                       {"seed", record.seed},
                       {"dt", record.dt}};
  out << header.dump() << '\n';
  for (const TickRow& row : record.rows) out << row_to_json(row).dump() << '\n';
  json footer = {{"type", "footer"},
                 {"status", to_string(record.status)},
                 {"rows", record.rows.size()}};
  if (!record.diagnostic.empty()) footer["diagnostic"] = record.diagnostic;
  out << footer.dump() << '\n';
}

std::string run_jsonl(const RunRecord& record) {
  std::ostringstream out;
  write_run_jsonl(record, out);
  return out.str();
}

std::string metrics_csv_row(std::uint64_t seed, ControlMode mode, const Metrics& m) {
  std::string line = std::to_string(seed);
  line += ',';
  line += to_string(mode);
  for (double v : {m.rmse_e2, m.rmse_e3, m.completion_time, m.path_lost_fraction,
                   m.saturation_fraction}) {
    line += ',';
    line += format_number(v);
  }
  line += ',';
  line += to_string(m.status);
  return line;
}

void write_file_atomic(const std::filesystem::path& target, const std::string& content) {
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace cpf

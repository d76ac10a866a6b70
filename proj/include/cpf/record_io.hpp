#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "cpf/simulation.hpp"

namespace cpf {

/// Shortest decimal that round-trips to the same double.
std::string format_number(double value);

nlohmann::json row_to_json(const TickRow& row);

/// Header line, one line per tick, then a footer with the terminal status.
void write_run_jsonl(const RunRecord& record, std::ostream& out);
std::string run_jsonl(const RunRecord& record);

inline constexpr const char* kMetricsCsvHeader =
    "seed,mode,rmse_e2,rmse_e3,completion_time,path_lost_fraction,"
    "saturation_fraction,status";

std::string metrics_csv_row(std::uint64_t seed, ControlMode mode, const Metrics& m);

/// Writes to a temporary sibling then renames over `target`.
void write_file_atomic(const std::filesystem::path& target, const std::string& content);

}  // namespace cpf

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpf/scenario.hpp"
#include "cpf/simulation.hpp"

namespace cpf {

struct BatchRow {
  std::uint64_t seed = 0;
  ControlMode mode = ControlMode::kManual;
  Metrics metrics;
};

struct ModeSummary {
  double mean_rmse_e2 = 0.0;
  double median_rmse_e2 = 0.0;
  double mean_rmse_e3 = 0.0;
  double median_rmse_e3 = 0.0;
  double mean_completion_time = 0.0;
  std::size_t aborted = 0;
};

struct BatchSummary {
  ModeSummary manual;
  ModeSummary cooperative;
  std::size_t pairs = 0;
  std::size_t cc_better_e2 = 0;  // seeds where CC rmse_e2 < MC rmse_e2
  std::size_t cc_better_e3 = 0;
  double cc_win_fraction_e2() const;
  double cc_win_fraction_e3() const;
};

/// `base` with the given mode and seed (the seed drives operator noise, so
/// both modes of one seed see the same noise stream).
Scenario with_mode_and_seed(const Scenario& base, ControlMode mode, std::uint64_t seed);

/// Runs MC and CC for every seed. Rows are ordered by (seed order, MC, CC)
/// regardless of `jobs`. Throws std::invalid_argument on an empty seed list.
std::vector<BatchRow> run_batch(const Scenario& base, std::span<const std::uint64_t> seeds,
                                unsigned jobs = 1);

BatchSummary summarize(const std::vector<BatchRow>& rows);

/// Header plus one line per row.
std::string batch_csv(const std::vector<BatchRow>& rows);

std::string summary_text(const BatchSummary& summary);

/// Parses "1,2,5-9" style seed lists.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace cpf

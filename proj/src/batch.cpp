#include "cpf/batch.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cpf/record_io.hpp"

namespace cpf {
namespace {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

ModeSummary summarize_mode(const std::vector<BatchRow>& rows, ControlMode mode) {
  std::vector<double> e2;
  std::vector<double> e3;
  std::vector<double> time;
  ModeSummary out;
  for (const auto& row : rows) {
    if (row.mode != mode) continue;
    if (row.metrics.status == RunStatus::kAborted) {
      ++out.aborted;
      continue;
    }
    e2.push_back(row.metrics.rmse_e2);
    e3.push_back(row.metrics.rmse_e3);
    time.push_back(row.metrics.completion_time);
  }
  out.mean_rmse_e2 = mean(e2);
  out.median_rmse_e2 = median(e2);
  out.mean_rmse_e3 = mean(e3);
  out.median_rmse_e3 = median(e3);
  out.mean_completion_time = mean(time);
  return out;
}

}  // namespace

double BatchSummary::cc_win_fraction_e2() const {
  return pairs == 0 ? 0.0 : static_cast<double>(cc_better_e2) / static_cast<double>(pairs);
}

double BatchSummary::cc_win_fraction_e3() const {
  return pairs == 0 ? 0.0 : static_cast<double>(cc_better_e3) / static_cast<double>(pairs);
}

Scenario with_mode_and_seed(const Scenario& base, ControlMode mode, std::uint64_t seed) {
  Scenario s = base;
  s.mode = mode;
  s.seed = seed;
  s.op.seed = seed;
  return s;
}

std::vector<BatchRow> run_batch(const Scenario& base, std::span<const std::uint64_t> seeds,
                                unsigned jobs) {
  if (seeds.empty()) throw std::invalid_argument("batch needs at least one seed");
  const std::size_t count = seeds.size() * 2;
  std::vector<BatchRow> rows(count);
  for (std::size_t i = 0; i < count; ++i) {
    rows[i].seed = seeds[i / 2];
    rows[i].mode = i % 2 == 0 ? ControlMode::kManual : ControlMode::kCooperative;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        const RunRecord record = run(with_mode_and_seed(base, rows[i].mode, rows[i].seed));
        rows[i].metrics = compute_metrics(record);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  jobs = std::clamp<unsigned>(jobs, 1, static_cast<unsigned>(count));
  std::vector<std::jthread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

BatchSummary summarize(const std::vector<BatchRow>& rows) {
  BatchSummary out;
  out.manual = summarize_mode(rows, ControlMode::kManual);
  out.cooperative = summarize_mode(rows, ControlMode::kCooperative);
  for (const auto& mc : rows) {
    if (mc.mode != ControlMode::kManual) continue;
    const auto cc = std::find_if(rows.begin(), rows.end(), [&](const BatchRow& r) {
      return r.mode == ControlMode::kCooperative && r.seed == mc.seed;
    });
    if (cc == rows.end()) continue;
    if (mc.metrics.status == RunStatus::kAborted || cc->metrics.status == RunStatus::kAborted) {
      continue;
    }
    ++out.pairs;
    if (cc->metrics.rmse_e2 < mc.metrics.rmse_e2) ++out.cc_better_e2;
    if (cc->metrics.rmse_e3 < mc.metrics.rmse_e3) ++out.cc_better_e3;
  }
  return out;
}

std::string batch_csv(const std::vector<BatchRow>& rows) {
  std::string out = kMetricsCsvHeader;
  out += '\n';
  for (const auto& row : rows) {
    out += metrics_csv_row(row.seed, row.mode, row.metrics);
    out += '\n';
  }
  return out;
}

std::string summary_text(const BatchSummary& s) {
  std::ostringstream out;
  auto mode_line = [&](const char* name, const ModeSummary& m) {
    out << name << ": mean_rmse_e2=" << format_number(m.mean_rmse_e2)
        << " median_rmse_e2=" << format_number(m.median_rmse_e2)
        << " mean_rmse_e3=" << format_number(m.mean_rmse_e3)
        << " median_rmse_e3=" << format_number(m.median_rmse_e3)
        << " mean_completion_time=" << format_number(m.mean_completion_time)
        << " aborted=" << m.aborted << '\n';
  };
  mode_line("MC", s.manual);
  mode_line("CC", s.cooperative);
  out << "pairs=" << s.pairs << " cc_better_e2=" << s.cc_better_e2
      << " cc_better_e3=" << s.cc_better_e3
      << " cc_win_fraction_e2=" << format_number(s.cc_win_fraction_e2())
      << " cc_win_fraction_e3=" << format_number(s.cc_win_fraction_e3()) << '\n';
  return out.str();
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream items(text);
  std::string item;
  auto parse = [&](const std::string& s) -> std::uint64_t {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || s.front() == '-') {
      throw std::invalid_argument("bad seed '" + s + "'");
    }
    return v;
  };
  while (std::getline(items, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      seeds.push_back(parse(item));
      continue;
    }
    const std::uint64_t lo = parse(item.substr(0, dash));
    const std::uint64_t hi = parse(item.substr(dash + 1));
    if (hi < lo) throw std::invalid_argument("bad seed range '" + item + "'");
    for (std::uint64_t v = lo; v <= hi; ++v) seeds.push_back(v);
  }
  return seeds;
}

}  // namespace cpf

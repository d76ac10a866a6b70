// cpf: command-line front end for runs, batch experiments and the teleop service.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpf/batch.hpp"
#include "cpf/record_io.hpp"
#include "cpf/scenario.hpp"
#include "cpf/simulation.hpp"
#include "cpf/teleop/server.hpp"
#include "cpf/teleop/session.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRun = 2;

struct ConfigFailure {
  std::string message;
};

cpf::Scenario load(const std::string& file) {
  try {
    return cpf::load_scenario_file(file);
  } catch (const std::exception& e) {
    throw ConfigFailure{e.what()};
  }
}

std::vector<std::uint64_t> seeds_from(const std::string& text) {
  try {
    return cpf::parse_seed_list(text);
  } catch (const std::exception& e) {
    throw ConfigFailure{std::string("--seeds: ") + e.what()};
  }
}

void print_metrics(const cpf::Metrics& m) {
  std::cout << "status=" << cpf::to_string(m.status)
            << " rmse_e2=" << cpf::format_number(m.rmse_e2)
            << " rmse_e3=" << cpf::format_number(m.rmse_e3)
            << " completion_time=" << cpf::format_number(m.completion_time)
            << " path_lost_fraction=" << cpf::format_number(m.path_lost_fraction)
            << " saturation_fraction=" << cpf::format_number(m.saturation_fraction) << '\n';
}

bool run_failed(cpf::RunStatus status) {
  return status == cpf::RunStatus::kAborted || status == cpf::RunStatus::kTimeout;
}

int cmd_run(const std::string& file, const fs::path& out, const std::string& replay_file) {
  const cpf::Scenario scenario = load(file);
  cpf::RunRecord record;
  if (replay_file.empty()) {
    record = cpf::run(scenario);
  } else {
    std::ifstream in(replay_file);
    if (!in) throw ConfigFailure{"cannot open trace " + replay_file};
    cpf::teleop::InputTrace trace;
    try {
      trace = cpf::teleop::read_trace_jsonl(in);
      record = cpf::teleop::replay(scenario, trace);
    } catch (const std::exception& e) {
      throw ConfigFailure{replay_file + ": " + e.what()};
    }
  }
  cpf::write_file_atomic(out / "run.jsonl", cpf::run_jsonl(record));
  if (record.rows.empty()) {
    std::cout << "status=" << cpf::to_string(record.status) << " (no rows recorded)\n";
    return run_failed(record.status) ? kExitRun : kExitOk;
  }
  const cpf::Metrics metrics = cpf::compute_metrics(record);
  cpf::write_file_atomic(out / "metrics.csv",
                         std::string(cpf::kMetricsCsvHeader) + "\n" +
                             cpf::metrics_csv_row(record.seed, scenario.mode, metrics) + "\n");
  print_metrics(metrics);
  if (!record.diagnostic.empty()) std::cerr << "diagnostic: " << record.diagnostic << '\n';
  return run_failed(record.status) ? kExitRun : kExitOk;
}

int cmd_compare(const std::string& file, const std::string& seed_text, unsigned jobs,
                const fs::path& out) {
  const cpf::Scenario scenario = load(file);
  const std::vector<std::uint64_t> seeds = seeds_from(seed_text);
  if (seeds.size() < 2) throw ConfigFailure{"compare needs at least 2 seeds"};
  const auto rows = cpf::run_batch(scenario, seeds, jobs);
  const cpf::BatchSummary summary = cpf::summarize(rows);
  cpf::write_file_atomic(out / "compare.csv", cpf::batch_csv(rows));
  const std::string text = cpf::summary_text(summary);
  cpf::write_file_atomic(out / "summary.txt", text);
  std::cout << text;
  const bool failed = std::any_of(rows.begin(), rows.end(), [](const cpf::BatchRow& r) {
    return run_failed(r.metrics.status);
  });
  return failed ? kExitRun : kExitOk;
}

int cmd_batch(const std::vector<std::string>& files, const std::string& seed_text,
              unsigned jobs, const fs::path& out) {
  std::vector<cpf::Scenario> scenarios;
  for (const auto& f : files) scenarios.push_back(load(f));  // all must parse first
  bool failed = false;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::vector<std::uint64_t> seeds =
        seed_text.empty() ? std::vector<std::uint64_t>{scenarios[i].seed} : seeds_from(seed_text);
    const auto rows = cpf::run_batch(scenarios[i], seeds, jobs);
    const fs::path target = out / (fs::path(files[i]).stem().string() + "_batch.csv");
    cpf::write_file_atomic(target, cpf::batch_csv(rows));
    std::cout << files[i] << ":\n" << cpf::summary_text(cpf::summarize(rows));
    for (const auto& r : rows) failed = failed || run_failed(r.metrics.status);
  }
  return failed ? kExitRun : kExitOk;
}

int cmd_serve(const std::string& file, int port, const std::string& address, const fs::path& out,
              const std::string& static_dir) {
  const cpf::Scenario scenario = load(file);
  cpf::teleop::ServerOptions options;
  options.address = address;
  options.out_dir = out;
  if (!static_dir.empty()) options.static_dir = static_dir;
  if (port < 0) {
    const char* env = std::getenv("TELEOP_PORT");
    port = env != nullptr ? std::atoi(env) : 8070;
  }
  if (port < 0 || port > 65535) throw ConfigFailure{"port out of range"};
  options.port = static_cast<unsigned short>(port);

  std::unique_ptr<cpf::teleop::TeleopServer> server;
  try {
    server = std::make_unique<cpf::teleop::TeleopServer>(scenario, options);
  } catch (const std::runtime_error& e) {
    std::cerr << "serve: " << e.what() << '\n';
    return kExitConfig;
  }
  server->run(/*handle_signals=*/true, [&] {
    std::cout << "listening on ws://" << address << ':' << server->port() << "/teleop" << std::endl;
  });
  for (const auto& f : server->written_files()) std::cout << "wrote " << f.string() << '\n';
  return kExitOk;
}

int cmd_validate(const std::vector<std::string>& files) {
  int status = kExitOk;
  for (const auto& f : files) {
    try {
      const cpf::Scenario s = cpf::load_scenario_file(f);
      std::cout << f << ": ok (hash " << cpf::scenario_hash(s) << ")\n";
    } catch (const std::exception& e) {
      std::cerr << f << ": " << e.what() << '\n';
      status = kExitConfig;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative path-following simulator"};
  app.require_subcommand(1);

  std::string scenario_file;
  std::string out_dir = ".";
  std::string seeds;
  std::string replay_file;
  std::vector<std::string> files;
  unsigned jobs = 1;
  int port = -1;
  std::string address = "127.0.0.1";
  std::string static_dir;

  auto* run = app.add_subcommand("run", "Run one scenario and write run.jsonl and metrics.csv");
  run->add_option("scenario", scenario_file, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--replay", replay_file, "Replay a recorded teleop input trace");

  auto* compare = app.add_subcommand("compare", "Paired MC/CC comparison over seeds");
  compare->add_option("scenario", scenario_file, "Scenario JSON file")->required();
  compare->add_option("--seeds", seeds, "Seed list, e.g. 1-20 or 1,4,7")->default_val("1-20");
  compare->add_option("--jobs", jobs, "Parallel runs")->default_val(1);
  compare->add_option("--out", out_dir, "Output directory");

  auto* batch = app.add_subcommand("batch", "Paired MC/CC runs for several scenarios");
  batch->add_option("scenarios", files, "Scenario JSON files")->required();
  batch->add_option("--seeds", seeds, "Seed list (default: each scenario's seed)");
  batch->add_option("--jobs", jobs, "Parallel runs")->default_val(1);
  batch->add_option("--out", out_dir, "Output directory");

  auto* serve = app.add_subcommand("serve", "Start the teleop WebSocket service");
  serve->add_option("scenario", scenario_file, "Scenario JSON file")->required();
  serve->add_option("--port", port, "Listen port (default: $TELEOP_PORT or 8070)");
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--out", out_dir, "Directory for session records");
  serve->add_option("--static", static_dir, "Serve static files (cockpit UI) from here");

  auto* validate = app.add_subcommand("validate", "Check scenario files");
  validate->add_option("scenarios", files, "Scenario JSON files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(scenario_file, out_dir, replay_file);
    if (*compare) return cmd_compare(scenario_file, seeds, jobs, out_dir);
    if (*batch) return cmd_batch(files, seeds, jobs, out_dir);
    if (*serve) return cmd_serve(scenario_file, port, address, out_dir, static_dir);
    if (*validate) return cmd_validate(files);
  } catch (const ConfigFailure& e) {
    std::cerr << "error: " << e.message << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRun;
  }
  return kExitConfig;
}

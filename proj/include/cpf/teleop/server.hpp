#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cpf/scenario.hpp"

namespace cpf::teleop {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8070;  // 0 picks an ephemeral port
  std::filesystem::path out_dir = "teleop_out";
  std::optional<std::filesystem::path> static_dir;  // served for other GET paths
  double telemetry_rate = 30.0;                      // snapshots per second
  double idle_pause = 0.5;  // seconds without driver input before pausing
  double max_lag = 0.5;     // wall-clock backlog dropped instead of replayed
};

/// WebSocket teleop service: `/teleop`, `/health`, `/scenario`.
///
/// Network IO runs on one thread, the sim on another; they exchange only
/// queued input messages and encoded snapshot frames.
class TeleopServer {
 public:
  /// Binds immediately. Throws std::runtime_error if the port is taken.
  TeleopServer(Scenario scenario, ServerOptions options);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  unsigned short port() const;

  /// Blocks until stop() (or SIGINT/SIGTERM when `handle_signals`).
  /// `ready` is called once signal handling is in place and the listener is
  /// accepting.
  void run(bool handle_signals = false, const std::function<void()>& ready = {});
  /// run() on a background thread.
  void start();
  /// Thread-safe. The current run is flushed to disk before run() returns.
  void stop();
  /// Joins the background thread started by start().
  void wait();

  /// Files written so far (run records, input traces, metrics).
  std::vector<std::filesystem::path> written_files() const;

  class Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace cpf::teleop

#include "cpf/teleop/server.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "cpf/record_io.hpp"
#include "cpf/teleop/session.hpp"

namespace cpf::teleop {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Clock = std::chrono::steady_clock;
using Frame = std::shared_ptr<const std::string>;

namespace {

constexpr std::size_t kMaxQueuedFrames = 64;

std::string mime_type(const std::filesystem::path& file) {
  const std::string ext = file.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

}  // namespace

class WsSession;

class TeleopServer::Impl {
 public:
  Impl(Scenario scenario, ServerOptions options);

  void run(bool handle_signals, const std::function<void()>& ready);
  void stop();

  // IO thread only.
  void join(const std::shared_ptr<WsSession>& session);
  void leave(WsSession* session);
  void on_message(WsSession& session, const std::string& text);
  http::response<http::string_body> handle_http(const http::request<http::string_body>& req);
  void accept();

  Scenario scenario_;
  ServerOptions options_;
  std::string scenario_hash_;
  asio::io_context ioc_;
  tcp::acceptor acceptor_;
  std::thread background_;
  unsigned short port_ = 0;

  // IO-thread state.
  std::set<std::shared_ptr<WsSession>> sessions_;
  WsSession* driver_ = nullptr;

  // Sim inbox.
  std::mutex inbox_mutex_;
  std::condition_variable inbox_cv_;
  std::vector<InputMessage> inbox_;
  bool stopping_ = false;

  mutable std::mutex shared_mutex_;
  std::string latest_snapshot_;
  std::vector<std::filesystem::path> written_;

 private:
  void sim_loop();
  void persist(const SessionResult& result);
  void broadcast(Frame frame);
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, TeleopServer::Impl& server)
      : ws_(std::move(socket)), server_(server) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->open_ = true;
      self->server_.join(self);
      self->do_read();
    });
  }

  void send(Frame frame) {
    if (!open_) return;
    if (queue_.size() >= kMaxQueuedFrames) return;  // slow reader: drop this frame
    queue_.push_back(std::move(frame));
    if (queue_.size() == 1) do_write();
  }

  void close() {
    if (!open_) return;
    open_ = false;
    ws_.async_close(websocket::close_code::going_away,
                    [self = shared_from_this()](beast::error_code) {});
  }

  bool driver = false;

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->open_ = false;
        self->server_.leave(self.get());
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.on_message(*self, text);
      self->do_read();
    });
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->open_ = false;
                        self->queue_.clear();
                        self->server_.leave(self.get());
                        return;
                      }
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->do_write();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  TeleopServer::Impl& server_;
  beast::flat_buffer buffer_;
  std::deque<Frame> queue_;
  bool open_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, TeleopServer::Impl& server)
      : stream_(std::move(socket)), server_(server) {}

  void run() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_read(ec);
                     });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    if (websocket::is_upgrade(req_) && req_.target() == "/teleop") {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), server_)->start(std::move(req_));
      return;
    }
    response_ = std::make_shared<http::response<http::string_body>>(server_.handle_http(req_));
    http::async_write(stream_, *response_,
                      [self = shared_from_this()](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (!self->response_->keep_alive()) {
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                          return;
                        }
                        self->do_read();
                      });
  }

  beast::tcp_stream stream_;
  TeleopServer::Impl& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<http::response<http::string_body>> response_;
};

TeleopServer::Impl::Impl(Scenario scenario, ServerOptions options)
    : scenario_(std::move(scenario)), options_(std::move(options)), acceptor_(ioc_) {
  validate(scenario_);
  scenario_hash_ = scenario_hash(scenario_);
  beast::error_code ec;
  const tcp::endpoint endpoint(asio::ip::make_address(options_.address, ec), options_.port);
  if (ec) throw std::runtime_error("bad listen address '" + options_.address + "'");
  acceptor_.open(endpoint.protocol());
  acceptor_.set_option(asio::socket_base::reuse_address(true));
  acceptor_.bind(endpoint, ec);
  if (ec == asio::error::address_in_use) {
    throw std::runtime_error("port " + std::to_string(options_.port) + " is already in use");
  }
  if (ec) throw std::runtime_error("cannot bind port " + std::to_string(options_.port) + ": " +
                                   ec.message());
  acceptor_.listen(asio::socket_base::max_listen_connections);
  port_ = acceptor_.local_endpoint().port();
}

void TeleopServer::Impl::accept() {
  acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<HttpSession>(std::move(socket), *this)->run();
    accept();
  });
}

void TeleopServer::Impl::join(const std::shared_ptr<WsSession>& session) {
  sessions_.insert(session);
  if (driver_ == nullptr) {
    driver_ = session.get();
    session->driver = true;
  }
  const Welcome hello{session->driver ? "driver" : "observer", scenario_hash_};
  session->send(std::make_shared<const std::string>(encode(OutboundMessage{hello})));
  std::lock_guard lock(shared_mutex_);
  if (!latest_snapshot_.empty()) session->send(std::make_shared<const std::string>(latest_snapshot_));
}

void TeleopServer::Impl::leave(WsSession* session) {
  if (driver_ == session) driver_ = nullptr;
  for (auto it = sessions_.begin(); it != sessions_.end(); ++it) {
    if (it->get() == session) {
      sessions_.erase(it);
      break;
    }
  }
}

void TeleopServer::Impl::on_message(WsSession& session, const std::string& text) {
  auto reply = [&](const ErrorFrame& frame) {
    session.send(std::make_shared<const std::string>(encode(OutboundMessage{frame})));
  };
  InputMessage message;
  try {
    message = decode_input(text);
  } catch (const ProtocolError& e) {
    reply(e.frame());
    return;
  }
  if (std::holds_alternative<HelloInput>(message.payload)) return;
  if (!session.driver) {
    reply({"read_only", "observers cannot send " + kind_name(message.payload)});
    return;
  }
  {
    std::lock_guard lock(inbox_mutex_);
    inbox_.push_back(std::move(message));
  }
  inbox_cv_.notify_one();
}

http::response<http::string_body> TeleopServer::Impl::handle_http(
    const http::request<http::string_body>& req) {
  http::response<http::string_body> res{http::status::ok, req.version()};
  res.keep_alive(req.keep_alive());
  auto reply = [&](http::status status, std::string type, std::string body) {
    res.result(status);
    res.set(http::field::content_type, type);
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  };
  if (req.method() != http::verb::get) {
    return reply(http::status::method_not_allowed, "text/plain", "GET only\n");
  }
  const std::string target(req.target());
  if (target == "/health") {
    nlohmann::json body = {{"status", "ok"},
                           {"protocol", kProtocolVersion},
                           {"scenario_hash", scenario_hash_},
                           {"driver_connected", driver_ != nullptr},
                           {"clients", sessions_.size()}};
    return reply(http::status::ok, "application/json", body.dump() + "\n");
  }
  if (target == "/scenario") {
    return reply(http::status::ok, "application/json", to_json(scenario_).dump(2) + "\n");
  }
  if (options_.static_dir && target.find("..") == std::string::npos && target.front() == '/') {
    std::filesystem::path file = *options_.static_dir / target.substr(1);
    if (target == "/") file = *options_.static_dir / "index.html";
    std::ifstream in(file, std::ios::binary);
    if (in && std::filesystem::is_regular_file(file)) {
      std::ostringstream content;
      content << in.rdbuf();
      return reply(http::status::ok, mime_type(file), content.str());
    }
  }
  return reply(http::status::not_found, "text/plain", "not found\n");
}

void TeleopServer::Impl::broadcast(Frame frame) {
  asio::post(ioc_, [this, frame = std::move(frame)] {
    for (const auto& session : sessions_) session->send(frame);
  });
}

void TeleopServer::Impl::persist(const SessionResult& result) {
  const std::filesystem::path stem =
      options_.out_dir / ("session_" + std::to_string(result.index));
  std::vector<std::filesystem::path> files;
  auto write = [&](const std::string& suffix, const std::string& content) {
    std::filesystem::path file = stem;
    file += suffix;
    write_file_atomic(file, content);
    files.push_back(file);
  };
  try {
    write(".jsonl", run_jsonl(result.record));
    write("_inputs.jsonl", trace_jsonl(result.trace));
    if (!result.record.rows.empty()) {
      write("_metrics.csv", std::string(kMetricsCsvHeader) + "\n" +
                                metrics_csv_row(result.record.seed, scenario_.mode,
                                                compute_metrics(result.record)) +
                                "\n");
    }
  } catch (const std::exception& e) {
    std::cerr << "teleop: failed to write session " << result.index << ": " << e.what() << '\n';
  }
  std::lock_guard lock(shared_mutex_);
  for (auto& f : files) {
    if (std::find(written_.begin(), written_.end(), f) == written_.end()) written_.push_back(f);
  }
}

void TeleopServer::Impl::sim_loop() {
  TeleopSession session(scenario_);
  const auto dt = std::chrono::duration<double>(scenario_.dt);
  const auto idle = std::chrono::duration<double>(options_.idle_pause);
  const auto snapshot_period = std::chrono::duration<double>(1.0 / options_.telemetry_rate);

  // The sim waits for the first driver input, and pauses again whenever
  // the driver goes quiet.
  bool paused = true;
  bool end_written = false;
  Clock::time_point last_input{};
  Clock::time_point last_wall = Clock::now();
  std::chrono::duration<double> backlog{0.0};
  Clock::time_point next_snapshot = Clock::now();

  for (;;) {
    std::vector<InputMessage> batch;
    bool stop = false;
    {
      Clock::time_point wake = next_snapshot;
      if (!paused) {
        wake = std::min(wake, last_input + std::chrono::duration_cast<Clock::duration>(idle));
        wake = std::min(wake, last_wall + std::chrono::duration_cast<Clock::duration>(dt - backlog));
      }
      std::unique_lock lock(inbox_mutex_);
      inbox_cv_.wait_until(lock, wake, [&] { return stopping_ || !inbox_.empty(); });
      batch.swap(inbox_);
      stop = stopping_;
    }
    const Clock::time_point now = Clock::now();

    for (const InputMessage& message : batch) {
      session.apply(message);
      if (std::holds_alternative<ResetInput>(message.payload)) end_written = false;
      last_input = now;
      if (paused) {
        paused = false;
        last_wall = now;
        backlog = backlog.zero();
      }
    }
    for (const SessionResult& result : session.take_finished()) persist(result);
    if (stop) break;

    if (!paused && now - last_input > idle) {
      session.apply(InputMessage{std::nullopt, StickInput{0.0, 0.0}});
      paused = true;
    }
    if (!paused) {
      backlog += now - last_wall;
      last_wall = now;
      if (backlog > std::chrono::duration<double>(options_.max_lag)) backlog = backlog.zero();
      while (backlog >= dt && session.sim().status() == RunStatus::kRunning) {
        session.step();
        backlog -= dt;
      }
    }
    if (session.sim().status() != RunStatus::kRunning && !end_written) {
      persist(session.finish());
      end_written = true;
    }

    if (now >= next_snapshot) {
      StateSnapshot snap = session.snapshot();
      if (paused && snap.status == "running") snap.status = "paused";
      auto frame = std::make_shared<const std::string>(encode(OutboundMessage{snap}));
      {
        std::lock_guard lock(shared_mutex_);
        latest_snapshot_ = *frame;
      }
      broadcast(std::move(frame));
      next_snapshot += std::chrono::duration_cast<Clock::duration>(snapshot_period);
      if (next_snapshot < now) next_snapshot = now;
    }
  }

  persist(session.finish());
  asio::post(ioc_, [this] {
    beast::error_code ec;
    acceptor_.close(ec);
    for (const auto& s : sessions_) s->close();
  });
}

void TeleopServer::Impl::run(bool handle_signals, const std::function<void()>& ready) {
  asio::signal_set signals(ioc_);
  if (handle_signals) {
    signals.add(SIGINT);
    signals.add(SIGTERM);
    signals.async_wait([this](beast::error_code ec, int) {
      if (!ec) stop();
    });
  }
  accept();
  if (ready) ready();
  std::thread sim([this] {
    sim_loop();
    // Give close frames a moment, then end the IO loop.
    asio::post(ioc_, [this] {
      auto timer = std::make_shared<asio::steady_timer>(ioc_, std::chrono::milliseconds(200));
      timer->async_wait([this, timer](beast::error_code) { ioc_.stop(); });
    });
  });
  ioc_.run();
  sim.join();
  ioc_.restart();
}

void TeleopServer::Impl::stop() {
  {
    std::lock_guard lock(inbox_mutex_);
    stopping_ = true;
  }
  inbox_cv_.notify_one();
}

TeleopServer::TeleopServer(Scenario scenario, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), std::move(options))) {}

TeleopServer::~TeleopServer() {
  stop();
  wait();
}

unsigned short TeleopServer::port() const { return impl_->port_; }

void TeleopServer::run(bool handle_signals, const std::function<void()>& ready) {
  impl_->run(handle_signals, ready);
}

void TeleopServer::start() {
  impl_->background_ = std::thread([this] { impl_->run(false, {}); });
}

void TeleopServer::stop() { impl_->stop(); }

void TeleopServer::wait() {
  if (impl_->background_.joinable()) impl_->background_.join();
}

std::vector<std::filesystem::path> TeleopServer::written_files() const {
  std::lock_guard lock(impl_->shared_mutex_);
  return impl_->written_;
}

}  // namespace cpf::teleop

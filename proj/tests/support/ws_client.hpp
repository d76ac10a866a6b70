#pragma once

#include <sys/socket.h>
#include <sys/time.h>

#include <chrono>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

namespace cpf::testing {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

// Blocking reads with a socket-level timeout so a broken server fails the test
// instead of hanging it.
inline void set_receive_timeout(tcp::socket& socket, std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<long>(timeout.count() / 1000);
  tv.tv_usec = static_cast<long>((timeout.count() % 1000) * 1000);
  ::setsockopt(socket.native_handle(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

class WsClient {
 public:
  explicit WsClient(unsigned short port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    set_receive_timeout(ws_.next_layer(), std::chrono::milliseconds(3000));
    ws_.handshake("127.0.0.1", "/teleop");
  }
  // Drops the TCP connection without the closing handshake: a graceful close
  // would block forever if the server has already gone.
  ~WsClient() {
    beast::error_code ec;
    ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
    ws_.next_layer().close(ec);
  }

  void send(const std::string& text) { ws_.write(asio::buffer(text)); }
  void send(const nlohmann::json& doc) { send(doc.dump()); }

  nlohmann::json read() {
    beast::flat_buffer buffer;
    ws_.read(buffer);
    return nlohmann::json::parse(beast::buffers_to_string(buffer.data()));
  }

  /// Reads frames until `match` accepts one, calling `between` after each
  /// rejected frame (e.g. to keep the driver heartbeat going).
  nlohmann::json read_until(const std::function<bool(const nlohmann::json&)>& match,
                            const std::function<void()>& between = {},
                            std::chrono::milliseconds limit = std::chrono::milliseconds(10000)) {
    const auto deadline = std::chrono::steady_clock::now() + limit;
    while (std::chrono::steady_clock::now() < deadline) {
      nlohmann::json frame = read();
      if (match(frame)) return frame;
      if (between) between();
    }
    throw std::runtime_error("no matching frame before the deadline");
  }

 private:
  asio::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

inline std::pair<int, std::string> http_request(unsigned short port, const std::string& target,
                                                http::verb verb = http::verb::get) {
  asio::io_context ioc;
  tcp::socket socket(ioc);
  tcp::resolver resolver(ioc);
  asio::connect(socket, resolver.resolve("127.0.0.1", std::to_string(port)));
  set_receive_timeout(socket, std::chrono::milliseconds(3000));
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "127.0.0.1");
  req.prepare_payload();
  http::write(socket, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(socket, buffer, res);
  beast::error_code ec;
  socket.shutdown(tcp::socket::shutdown_both, ec);
  return {res.result_int(), res.body()};
}

inline nlohmann::json stick_message(double phi_x, double phi_y, std::int64_t seq) {
  return {{"v", 1}, {"kind", "stick"}, {"seq", seq}, {"phi_x", phi_x}, {"phi_y", phi_y}};
}

}  // namespace cpf::testing

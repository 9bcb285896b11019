#pragma once

#include <deque>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "care/server/hub.hpp"

namespace care::server {

namespace beast = boost::beast;
namespace http = boost::beast::http;
namespace websocket = boost::beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct ServerConfig {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
  std::size_t io_threads = 1;
};

namespace detail {

inline std::string_view sv(beast::string_view s) { return {s.data(), s.size()}; }

inline std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size()) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

/// Splits "/path?a=1&b=2" into the path and its decoded query parameters.
inline std::pair<std::string, std::map<std::string, std::string>> parse_target(std::string_view t) {
  std::map<std::string, std::string> q;
  const auto qm = t.find('?');
  const std::string path(t.substr(0, qm));
  if (qm == std::string_view::npos) return {path, q};
  std::string_view rest = t.substr(qm + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const std::string_view kv = rest.substr(0, amp);
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) {
      q[url_decode(kv)] = "";
    } else {
      q[url_decode(kv.substr(0, eq))] = url_decode(kv.substr(eq + 1));
    }
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return {path, q};
}

inline std::string_view mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

}  // namespace detail

class WsConnection : public Connection, public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(std::shared_ptr<net::io_context> ioc, tcp::socket&& socket, SessionHub& hub)
      : ioc_(std::move(ioc)), ws_(std::move(socket)), hub_(hub) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    auto [path, query] = detail::parse_target(detail::sv(req.target()));
    ws_.async_accept(req, [self = shared_from_this(), query = std::move(query)](beast::error_code ec) {
      if (ec) return;
      self->auto_join(query);
      self->read();
    });
  }

 protected:
  void deliver(std::string text) override {
    net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->queue_.push_back(std::move(text));
      if (self->queue_.size() == 1) self->write();
    });
  }

 private:
  void auto_join(const std::map<std::string, std::string>& q) {
    auto s = q.find("session");
    auto r = q.find("role");
    if (s == q.end() || r == q.end()) return;
    auto role = parse_role(r->second);
    if (!role) {
      send_error(ErrorCode::BadFrame, "unknown role");
      return;
    }
    auto n = q.find("name");
    hub_.join(shared_from_this(), s->second, *role, n == q.end() ? std::string() : n->second);
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->hub_.leave(*self);
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->hub_.on_frame(self, text);
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  // The hub may hold this connection past server shutdown; keep the
  // context alive for the socket's destructor.
  std::shared_ptr<net::io_context> ioc_;
  websocket::stream<beast::tcp_stream> ws_;
  SessionHub& hub_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(std::shared_ptr<net::io_context> ioc, tcp::socket&& socket, SessionHub& hub,
                 const ServerConfig& cfg)
      : ioc_(std::move(ioc)), stream_(std::move(socket)), hub_(hub), cfg_(cfg) {}

  void start() {
    net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read(); });
  }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->handle();
    });
  }

  void handle() {
    if (websocket::is_upgrade(req_)) {
      auto [path, q] = detail::parse_target(detail::sv(req_.target()));
      if (path == "/ws") {
        stream_.expires_never();
        std::make_shared<WsConnection>(ioc_, stream_.release_socket(), hub_)->start(std::move(req_));
        return;
      }
    }
    respond(route());
  }

  http::response<http::string_body> make(http::status st, std::string body,
                                         std::string_view type = "application/json") {
    http::response<http::string_body> res{st, req_.version()};
    res.set(http::field::content_type, beast::string_view(type.data(), type.size()));
    res.keep_alive(req_.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  }

  http::response<http::string_body> route() {
    auto [path, q] = detail::parse_target(detail::sv(req_.target()));
    if (path == "/healthz" && req_.method() == http::verb::get) {
      return make(http::status::ok, R"({"status":"ok"})");
    }
    if (path == "/sessions" && req_.method() == http::verb::post) {
      Category cat = Category::anxiety();
      if (!req_.body().empty()) {
        try {
          const Json body = Json::parse(req_.body());
          if (body.contains("category")) cat = Category::parse(body["category"].get<std::string>());
        } catch (const std::exception& e) {
          return make(http::status::bad_request, Json{{"error", e.what()}}.dump());
        }
      }
      const std::string id = hub_.create_session(cat);
      return make(http::status::created, Json{{"session_id", id}}.dump());
    }
    if (cfg_.static_dir && req_.method() == http::verb::get && path.find("..") == std::string::npos) {
      std::filesystem::path file = *cfg_.static_dir / (path == "/" ? "index.html" : path.substr(1));
      std::ifstream in(file, std::ios::binary);
      if (in) {
        std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return make(http::status::ok, std::move(body), detail::mime_type(file));
      }
    }
    return make(http::status::not_found, R"({"error":"not found"})");
  }

  void respond(http::response<http::string_body> res) {
    auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!sp->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  std::shared_ptr<net::io_context> ioc_;
  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  SessionHub& hub_;
  const ServerConfig& cfg_;
};

/// HTTP + WebSocket front end for a SessionHub.
///
///   GET  /healthz
///   POST /sessions            {"category": "..."} -> {"session_id": "..."}
///   GET  /ws?session=&role=&name=   upgrade; joins immediately when given
///   GET  /*                   static files when a static dir is set
class WsServer {
 public:
  WsServer(SessionHub& hub, ServerConfig cfg) : hub_(hub), cfg_(std::move(cfg)), ioc_(std::make_shared<net::io_context>()), acceptor_(*ioc_) {}

  ~WsServer() { stop(); }

  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  /// Binds and starts serving on background threads.
  void start() {
    const tcp::endpoint ep{net::ip::make_address(cfg_.address), cfg_.port};
    acceptor_.open(ep.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen(net::socket_base::max_listen_connections);
    port_ = acceptor_.local_endpoint().port();
    accept();
    for (std::size_t i = 0; i < std::max<std::size_t>(1, cfg_.io_threads); ++i) {
      threads_.emplace_back([this] { ioc_->run(); });
    }
  }

  void stop() {
    if (threads_.empty()) return;
    beast::error_code ignored;
    acceptor_.close(ignored);
    ioc_->stop();
    for (auto& t : threads_) t.join();
    threads_.clear();
  }

  unsigned short port() const noexcept { return port_; }
  const std::string& address() const noexcept { return cfg_.address; }

 private:
  void accept() {
    acceptor_.async_accept(net::make_strand(*ioc_), [this](beast::error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<HttpConnection>(ioc_, std::move(socket), hub_, cfg_)->start();
      if (acceptor_.is_open()) accept();
    });
  }

  SessionHub& hub_;
  ServerConfig cfg_;
  std::shared_ptr<net::io_context> ioc_;
  tcp::acceptor acceptor_;
  unsigned short port_ = 0;
  std::vector<std::thread> threads_;
};

}  // namespace care::server

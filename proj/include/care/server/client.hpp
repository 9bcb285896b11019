#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "care/bundle.hpp"
#include "care/domain.hpp"
#include "care/errors.hpp"
#include "care/server/protocol.hpp"

namespace care::server {

/// Creates a session over HTTP and returns its id.
inline std::string create_remote_session(const std::string& host, unsigned short port,
                                         const Category& category) {
  namespace beast = boost::beast;
  namespace http = beast::http;
  using tcp = boost::asio::ip::tcp;
  boost::asio::io_context ioc;
  tcp::resolver resolver(ioc);
  beast::tcp_stream stream(ioc);
  stream.connect(resolver.resolve(host, std::to_string(port)));
  http::request<http::string_body> req{http::verb::post, "/sessions", 11};
  req.set(http::field::host, host);
  req.set(http::field::content_type, "application/json");
  req.body() = Json{{"category", category.str()}}.dump();
  req.prepare_payload();
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  beast::error_code ignored;
  stream.socket().shutdown(tcp::socket::shutdown_both, ignored);
  if (res.result() != http::status::created) {
    throw Error("POST /sessions failed: " + std::to_string(res.result_int()));
  }
  return Json::parse(res.body()).at("session_id").get<std::string>();
}

/// WebSocket chat client. Incoming frames are kept in arrival order and can
/// be waited on from any thread.
class ChatClient {
 public:
  ChatClient() = default;
  ~ChatClient() { close(); }

  ChatClient(const ChatClient&) = delete;
  ChatClient& operator=(const ChatClient&) = delete;

  /// Connects to /ws and joins `session` as `role`.
  void connect(const std::string& host, unsigned short port, const std::string& session, Role role,
               const std::string& name) {
    using tcp = boost::asio::ip::tcp;
    tcp::resolver resolver(ioc_);
    auto results = resolver.resolve(host, std::to_string(port));
    boost::asio::connect(ws_.next_layer(), results);
    const std::string target = "/ws?session=" + session + "&role=" + std::string(to_string(role)) +
                               "&name=" + encode(name);
    ws_.handshake(host + ":" + std::to_string(port), target);
    ws_.text(true);
    read();
    io_ = std::thread([this] { ioc_.run(); });
  }

  void send(std::string_view type, Json payload) {
    std::string text = Json{{"type", type}, {"payload", std::move(payload)}}.dump();
    boost::asio::post(ioc_, [this, text = std::move(text)]() mutable {
      out_.push_back(std::move(text));
      if (out_.size() == 1) write();
    });
  }

  void say(const std::string& text) { send(frame::kMessage, Json{{"text", text}}); }

  std::vector<Json> frames() const {
    std::lock_guard lock(mu_);
    return frames_;
  }

  std::vector<Json> frames_of(std::string_view type) const {
    std::vector<Json> out;
    for (Json& f : frames()) {
      if (f.value("type", "") == type) out.push_back(std::move(f));
    }
    return out;
  }

  /// Waits until `pred(frames)` holds. Returns false on timeout.
  bool wait_until(const std::function<bool(const std::vector<Json>&)>& pred,
                  std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return pred(frames_) || closed_; }) && pred(frames_);
  }

  /// Waits for the first frame of `type` after the first `skip` such frames.
  std::optional<Json> wait_for(std::string_view type, std::chrono::milliseconds timeout,
                               std::size_t skip = 0) {
    std::optional<Json> found;
    wait_until(
        [&](const std::vector<Json>& fs) {
          std::size_t seen = 0;
          for (const Json& f : fs) {
            if (f.value("type", "") != type) continue;
            if (seen++ == skip) {
              found = f;
              return true;
            }
          }
          return false;
        },
        timeout);
    return found;
  }

  void close() {
    if (!io_.joinable()) return;
    boost::asio::post(ioc_, [this] {
      ws_.async_close(boost::beast::websocket::close_code::normal,
                      [](boost::beast::error_code) {});
    });
    // Give the close handshake a moment, then stop regardless.
    {
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, std::chrono::seconds(2), [&] { return closed_; });
    }
    ioc_.stop();
    io_.join();
  }

 private:
  static std::string encode(const std::string& s) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
      if (std::isalnum(c) || c == '-' || c == '_' || c == '.') {
        out += static_cast<char>(c);
      } else {
        out += '%';
        out += kHex[c >> 4];
        out += kHex[c & 0xF];
      }
    }
    return out;
  }

  void read() {
    ws_.async_read(buf_, [this](boost::beast::error_code ec, std::size_t) {
      std::lock_guard lock(mu_);
      if (ec) {
        closed_ = true;
        cv_.notify_all();
        return;
      }
      try {
        frames_.push_back(Json::parse(boost::beast::buffers_to_string(buf_.data())));
      } catch (const Json::exception&) {
      }
      buf_.consume(buf_.size());
      cv_.notify_all();
      read();
    });
  }

  void write() {
    ws_.async_write(boost::asio::buffer(out_.front()), [this](boost::beast::error_code ec, std::size_t) {
      if (ec) return;
      out_.pop_front();
      if (!out_.empty()) write();
    });
  }

  boost::asio::io_context ioc_;
  boost::beast::websocket::stream<boost::asio::ip::tcp::socket> ws_{ioc_};
  boost::beast::flat_buffer buf_;
  std::deque<std::string> out_;
  std::thread io_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Json> frames_;
  bool closed_ = false;
};

/// Seeker turns for one practice scenario.
struct SeekerScript {
  std::string scenario_id;
  Category category;
  std::vector<std::string> turns;
};

inline SeekerScript parse_seeker_script(const Json& j) {
  SeekerScript s;
  s.scenario_id = j.at("scenario_id").get<std::string>();
  s.category = Category::parse(j.at("category").get<std::string>());
  s.turns = j.at("turns").get<std::vector<std::string>>();
  if (s.turns.empty()) throw std::invalid_argument("script " + s.scenario_id + " has no turns");
  return s;
}

inline SeekerScript load_seeker_script(const std::filesystem::path& path) {
  return parse_seeker_script(Json::parse(care::detail::read_file(path)));
}

/// Plays `script` as the seeker: one turn, then wait for a counselor reply
/// (or `reply_wait`), and so on. Returns the seeker's received frames.
inline std::vector<Json> run_scripted_seeker(const std::string& host, unsigned short port,
                                             const std::string& session, const SeekerScript& script,
                                             std::chrono::milliseconds reply_wait,
                                             const std::string& name = "seeker") {
  ChatClient c;
  c.connect(host, port, session, Role::Seeker, name);
  c.wait_until(
      [](const std::vector<Json>& fs) {
        return std::any_of(fs.begin(), fs.end(), [](const Json& f) {
          const std::string t = f.value("type", "");
          return t == frame::kJoined || t == frame::kError;
        });
      },
      std::chrono::seconds(5));
  if (auto err = c.wait_for(frame::kError, std::chrono::milliseconds(0))) {
    throw Error("seeker join failed: " + (*err)["payload"].value("code", std::string("?")));
  }
  if (!c.wait_for(frame::kJoined, std::chrono::milliseconds(0))) throw Error("seeker join timed out");
  for (const std::string& turn : script.turns) {
    const auto count_counselor = [](const std::vector<Json>& fs) {
      std::size_t n = 0;
      for (const Json& f : fs) {
        if (f.value("type", "") == frame::kMessage && f["payload"].value("role", "") == "counselor") ++n;
      }
      return n;
    };
    const std::size_t before = count_counselor(c.frames());
    c.say(turn);
    c.wait_until([&](const std::vector<Json>& fs) { return count_counselor(fs) > before; }, reply_wait);
  }
  auto out = c.frames();
  c.close();
  return out;
}

struct AutoCounselorOptions {
  std::string name = "auto-counselor";
  /// Utterances needed before the server offers suggestions.
  std::size_t min_utterances = 5;
  std::chrono::milliseconds suggestion_wait{5000};
  std::string fallback = "Thank you for sharing that with me. Could you tell me more?";
};

/// Counselor bot: answers each seeker message with the top suggestion
/// (clicked, then sent unmodified) or a fixed fallback. Runs until `stop`.
inline std::vector<Json> run_auto_counselor(const std::string& host, unsigned short port,
                                            const std::string& session, const std::atomic<bool>& stop,
                                            const AutoCounselorOptions& opt = {}) {
  ChatClient c;
  c.connect(host, port, session, Role::Counselor, opt.name);
  if (!c.wait_for(frame::kJoined, std::chrono::seconds(5))) throw Error("counselor join timed out");
  const auto seeker_messages = [](const std::vector<Json>& fs) {
    std::vector<std::size_t> idx;
    for (const Json& f : fs) {
      if (f.value("type", "") == frame::kMessage && f["payload"].value("role", "") == "seeker") {
        idx.push_back(f["payload"].value("index", std::size_t{0}));
      }
    }
    return idx;
  };
  std::size_t handled = 0;
  while (!stop.load()) {
    if (!c.wait_until([&](const std::vector<Json>& fs) { return seeker_messages(fs).size() > handled; },
                      std::chrono::milliseconds(100))) {
      continue;
    }
    const auto seen = seeker_messages(c.frames());
    handled = seen.size();
    const std::size_t index = seen.back();
    std::optional<Json> chosen;
    if (index + 1 >= opt.min_utterances) {
      c.wait_until(
          [&](const std::vector<Json>& fs) {
            for (const Json& f : fs) {
              if (f.value("type", "") != frame::kSuggestions) continue;
              const Json& p = f["payload"];
              if (p.value("for_utterance_index", std::size_t{0}) != index) continue;
              if (!p["items"].empty()) chosen = p["items"][0];
              return true;
            }
            return false;
          },
          opt.suggestion_wait);
    }
    if (chosen) {
      c.send(frame::kSuggestionClick, Json{{"suggestion_id", (*chosen)["id"]}});
      c.say((*chosen)["text"].get<std::string>());
    } else {
      c.say(opt.fallback);
    }
  }
  auto out = c.frames();
  c.close();
  return out;
}

}  // namespace care::server

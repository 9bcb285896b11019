#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "care/domain.hpp"

// Wire protocol: one UTF-8 JSON object per socket message,
//   {"type": ..., "seq": n, "payload": {...}}
// seq increases by one per frame on each connection (server -> client).

namespace care::server {

enum class Role : std::uint8_t { Seeker, Counselor };

constexpr std::string_view to_string(Role r) noexcept {
  return r == Role::Seeker ? "seeker" : "counselor";
}

inline std::optional<Role> parse_role(std::string_view s) noexcept {
  if (s == "seeker") return Role::Seeker;
  if (s == "counselor") return Role::Counselor;
  return std::nullopt;
}

constexpr Speaker speaker_of(Role r) noexcept {
  return r == Role::Seeker ? Speaker::Seeker : Speaker::Counselor;
}

constexpr Role other(Role r) noexcept {
  return r == Role::Seeker ? Role::Counselor : Role::Seeker;
}

namespace frame {
inline constexpr std::string_view kJoin = "join";
inline constexpr std::string_view kJoined = "joined";
inline constexpr std::string_view kMessage = "message";
inline constexpr std::string_view kTyping = "typing";
inline constexpr std::string_view kSuggestions = "suggestions";
inline constexpr std::string_view kPanelToggle = "panel_toggle";
inline constexpr std::string_view kSuggestionClick = "suggestion_click";
inline constexpr std::string_view kError = "error";
inline constexpr std::string_view kPresence = "presence";
}  // namespace frame

enum class ErrorCode : std::uint8_t {
  RoleTaken,
  UnknownSession,
  NotJoined,
  EmptyMessage,
  UnknownSuggestion,
  AlreadyJoined,
  BadFrame,
};

constexpr std::string_view to_string(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::RoleTaken: return "RoleTaken";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::NotJoined: return "NotJoined";
    case ErrorCode::EmptyMessage: return "EmptyMessage";
    case ErrorCode::UnknownSuggestion: return "UnknownSuggestion";
    case ErrorCode::AlreadyJoined: return "AlreadyJoined";
    case ErrorCode::BadFrame: return "BadFrame";
  }
  return "Unknown";
}

/// One client connection as seen by the hub. Implementations only enqueue
/// the text in deliver(); they must not block.
class Connection {
 public:
  virtual ~Connection() = default;

  void send(std::string_view type, Json payload) {
    std::lock_guard lock(mu_);
    Json f{{"type", type}, {"seq", ++seq_}, {"payload", std::move(payload)}};
    deliver(f.dump());
  }

  void send_error(ErrorCode code, std::string message = {}) {
    send(frame::kError, Json{{"code", to_string(code)}, {"message", std::move(message)}});
  }

 protected:
  virtual void deliver(std::string text) = 0;

 private:
  std::mutex mu_;
  std::uint64_t seq_ = 0;
};

}  // namespace care::server

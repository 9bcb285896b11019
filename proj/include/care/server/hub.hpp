#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/asio/post.hpp>
#include <boost/asio/thread_pool.hpp>

#include "care/domain.hpp"
#include "care/pipeline.hpp"
#include "care/server/protocol.hpp"
#include "care/telemetry.hpp"

namespace care::server {

/// Produces suggestions for a transcript snapshot. May be slow; always
/// called off the message path.
using Suggester = std::function<SuggestionSet(const Conversation&)>;
using Clock = std::function<std::int64_t()>;

inline std::int64_t wall_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct HubConfig {
  /// Suggestions are only computed once the transcript has this many utterances.
  std::size_t min_utterances = 5;
  std::optional<std::filesystem::path> log_dir;
  std::size_t pipeline_threads = 2;
  Clock clock = wall_clock_ms;
};

/// Suggestion set as shown to the counselor, with per-item ids.
struct LiveSuggestions {
  std::size_t for_utterance_index = 0;
  std::vector<std::pair<std::string, Suggestion>> items;
};

struct SessionSnapshot {
  std::string session_id;
  Category category;
  Conversation transcript;
  bool panel_visible = true;
  std::int64_t created_ms = 0;
  std::optional<std::string> seeker_name;
  std::optional<std::string> counselor_name;
};

/// Session registry and message routing, independent of the transport.
///
/// Each session's state is guarded by its own mutex; the pipeline runs on a
/// separate pool and only ever sees immutable transcript snapshots. Results
/// for a transcript that has since grown are discarded.
class SessionHub {
 public:
  SessionHub(Suggester suggester, HubConfig cfg = {})
      : suggester_(std::move(suggester)), cfg_(std::move(cfg)), pool_(cfg_.pipeline_threads) {
    if (cfg_.log_dir) std::filesystem::create_directories(*cfg_.log_dir);
  }

  ~SessionHub() { pool_.join(); }

  SessionHub(const SessionHub&) = delete;
  SessionHub& operator=(const SessionHub&) = delete;

  std::string create_session(Category category = Category::anxiety()) {
    std::lock_guard lock(mu_);
    std::string id;
    do {
      id = random_id();
    } while (sessions_.contains(id));
    auto s = std::make_shared<Session>();
    s->id = id;
    s->category = category;
    s->created_ms = cfg_.clock();
    s->transcript.conversation_id = id;
    s->transcript.category = std::move(category);
    if (cfg_.log_dir) s->log = std::make_unique<EventLog>(*cfg_.log_dir / (id + ".jsonl"));
    sessions_.emplace(id, std::move(s));
    return id;
  }

  bool has_session(const std::string& id) const {
    std::lock_guard lock(mu_);
    return sessions_.contains(id);
  }

  std::optional<SessionSnapshot> snapshot(const std::string& id) const {
    auto s = find(id);
    if (!s) return std::nullopt;
    std::lock_guard lock(s->mu);
    SessionSnapshot out{s->id, s->category, s->transcript, s->panel_visible, s->created_ms, {}, {}};
    if (s->seeker) out.seeker_name = s->seeker->name;
    if (s->counselor) out.counselor_name = s->counselor->name;
    return out;
  }

  std::optional<LiveSuggestions> live_suggestions(const std::string& id) const {
    auto s = find(id);
    if (!s) return std::nullopt;
    std::lock_guard lock(s->mu);
    return s->live;
  }

  // ---- Operations ----------------------------------------------------------

  std::optional<ErrorCode> join(const std::shared_ptr<Connection>& conn, const std::string& session_id,
                                Role role, std::string name) {
    std::shared_ptr<Session> s;
    {
      std::lock_guard lock(mu_);
      if (bindings_.contains(conn.get())) return fail(*conn, ErrorCode::AlreadyJoined);
      auto it = sessions_.find(session_id);
      if (it == sessions_.end()) return fail(*conn, ErrorCode::UnknownSession, session_id);
      s = it->second;
      std::lock_guard slock(s->mu);
      auto& slot = s->slot(role);
      if (slot) return fail(*conn, ErrorCode::RoleTaken, std::string(to_string(role)));
      slot = Participant{conn, name};
      bindings_[conn.get()] = Binding{s, role};
    }
    std::lock_guard slock(s->mu);
    Json transcript = Json::array();
    for (const Utterance& u : s->transcript.utterances) transcript.push_back(message_payload(u));
    conn->send(frame::kJoined, Json{{"session_id", s->id},
                                    {"role", to_string(role)},
                                    {"name", name},
                                    {"category", s->category.str()},
                                    {"panel_visible", s->panel_visible},
                                    {"transcript", transcript}});
    log(*s, EventType::Join, Json{{"role", to_string(role)}, {"name", name}});
    broadcast_presence(*s);
    return std::nullopt;
  }

  void leave(Connection& conn) {
    std::shared_ptr<Session> s;
    Role role;
    {
      std::lock_guard lock(mu_);
      auto it = bindings_.find(&conn);
      if (it == bindings_.end()) return;
      s = it->second.session;
      role = it->second.role;
      bindings_.erase(it);
    }
    std::lock_guard slock(s->mu);
    s->slot(role).reset();
    log(*s, EventType::Leave, Json{{"role", to_string(role)}});
    broadcast_presence(*s);
  }

  std::optional<ErrorCode> message(Connection& conn, const std::string& text) {
    auto b = binding(conn);
    if (!b) return fail(conn, ErrorCode::NotJoined);
    if (normalize_text(text).empty()) return fail(conn, ErrorCode::EmptyMessage);
    Session& s = *b->session;
    Conversation snap;
    bool run_pipeline = false;
    {
      std::lock_guard lock(s.mu);
      const Utterance& u = s.transcript.append(speaker_of(b->role), text, {}, cfg_.clock());
      const Json payload = message_payload(u);
      // Fan-out happens before, and independently of, the pipeline.
      for (Role r : {Role::Seeker, Role::Counselor}) {
        if (auto& p = s.slot(r)) p->conn->send(frame::kMessage, payload);
      }
      log(s, EventType::Message, Json{{"index", u.index}, {"role", to_string(b->role)}, {"text", u.text}});
      s.live.reset();
      run_pipeline = s.counselor.has_value() && s.transcript.size() >= cfg_.min_utterances;
      if (run_pipeline) snap = s.transcript;
    }
    if (run_pipeline) schedule(b->session, std::move(snap));
    return std::nullopt;
  }

  std::optional<ErrorCode> typing(Connection& conn, bool is_typing) {
    auto b = binding(conn);
    if (!b) return fail(conn, ErrorCode::NotJoined);
    Session& s = *b->session;
    std::lock_guard lock(s.mu);
    if (auto& peer = s.slot(other(b->role))) {
      peer->conn->send(frame::kTyping, Json{{"role", to_string(b->role)}, {"is_typing", is_typing}});
    }
    log(s, EventType::Typing, Json{{"role", to_string(b->role)}, {"is_typing", is_typing}});
    return std::nullopt;
  }

  std::optional<ErrorCode> panel_toggle(Connection& conn, bool visible) {
    auto b = binding(conn);
    if (!b || b->role != Role::Counselor) return fail(conn, ErrorCode::NotJoined, "counselor only");
    Session& s = *b->session;
    std::lock_guard lock(s.mu);
    s.panel_visible = visible;
    log(s, EventType::PanelToggle, Json{{"visible", visible}});
    return std::nullopt;
  }

  std::optional<ErrorCode> suggestion_click(Connection& conn, const std::string& suggestion_id) {
    auto b = binding(conn);
    if (!b || b->role != Role::Counselor) return fail(conn, ErrorCode::NotJoined, "counselor only");
    Session& s = *b->session;
    std::lock_guard lock(s.mu);
    if (s.live) {
      for (const auto& [id, item] : s.live->items) {
        if (id != suggestion_id) continue;
        log(s, EventType::SuggestionClick,
            Json{{"suggestion_id", id}, {"strategy", to_string(item.strategy)}, {"text", item.text}});
        return std::nullopt;
      }
    }
    return fail(conn, ErrorCode::UnknownSuggestion, suggestion_id);
  }

  /// Parses and dispatches one client frame.
  void on_frame(const std::shared_ptr<Connection>& conn, std::string_view text) {
    Json f;
    try {
      f = Json::parse(text);
    } catch (const Json::exception&) {
      fail(*conn, ErrorCode::BadFrame, "invalid JSON");
      return;
    }
    if (!f.is_object() || !f.contains("type") || !f["type"].is_string()) {
      fail(*conn, ErrorCode::BadFrame, "missing type");
      return;
    }
    const std::string type = f["type"].get<std::string>();
    const Json payload = f.value("payload", Json::object());
    try {
      if (type == frame::kJoin) {
        auto role = parse_role(payload.value("role", ""));
        if (!role) {
          fail(*conn, ErrorCode::BadFrame, "unknown role");
          return;
        }
        join(conn, payload.value("session", ""), *role, payload.value("name", ""));
      } else if (type == frame::kMessage) {
        message(*conn, payload.value("text", ""));
      } else if (type == frame::kTyping) {
        typing(*conn, payload.value("is_typing", false));
      } else if (type == frame::kPanelToggle) {
        panel_toggle(*conn, payload.value("visible", true));
      } else if (type == frame::kSuggestionClick) {
        suggestion_click(*conn, payload.value("suggestion_id", ""));
      } else {
        fail(*conn, ErrorCode::BadFrame, "unknown type '" + type + "'");
      }
    } catch (const Json::exception& e) {
      fail(*conn, ErrorCode::BadFrame, e.what());
    }
  }

  /// Blocks until no pipeline job is queued or running.
  void drain() {
    std::unique_lock lock(jobs_mu_);
    jobs_cv_.wait(lock, [&] { return jobs_ == 0; });
  }

 private:
  struct Participant {
    std::shared_ptr<Connection> conn;
    std::string name;
  };

  struct Session {
    std::mutex mu;
    std::string id;
    Category category;
    Conversation transcript;
    std::optional<Participant> seeker;
    std::optional<Participant> counselor;
    bool panel_visible = true;
    std::int64_t created_ms = 0;
    std::optional<LiveSuggestions> live;
    std::unique_ptr<EventLog> log;

    std::optional<Participant>& slot(Role r) { return r == Role::Seeker ? seeker : counselor; }
  };

  struct Binding {
    std::shared_ptr<Session> session;
    Role role;
  };

  static Json message_payload(const Utterance& u) {
    return Json{{"index", u.index},
                {"role", to_string(u.speaker)},
                {"text", u.text},
                {"ts_ms", u.timestamp_ms.value_or(0)}};
  }

  static std::optional<ErrorCode> fail(Connection& conn, ErrorCode code, std::string message = {}) {
    conn.send_error(code, std::move(message));
    return code;
  }

  std::string random_id() {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id(16, '0');
    for (char& c : id) c = kHex[id_rng_() & 0xF];
    return id;
  }

  std::shared_ptr<Session> find(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::optional<Binding> binding(Connection& conn) const {
    std::lock_guard lock(mu_);
    auto it = bindings_.find(&conn);
    if (it == bindings_.end()) return std::nullopt;
    return it->second;
  }

  // Caller holds s.mu.
  void log(Session& s, EventType type, Json payload) {
    if (!s.log) return;
    s.log->append(EventRecord{cfg_.clock(), s.id, type, std::move(payload)});
  }

  // Caller holds s.mu.
  void broadcast_presence(Session& s) {
    const Json payload{{"seeker", s.seeker ? Json(s.seeker->name) : Json(nullptr)},
                       {"counselor", s.counselor ? Json(s.counselor->name) : Json(nullptr)}};
    for (Role r : {Role::Seeker, Role::Counselor}) {
      if (auto& p = s.slot(r)) p->conn->send(frame::kPresence, payload);
    }
  }

  void schedule(std::shared_ptr<Session> session, Conversation snap) {
    {
      std::lock_guard lock(jobs_mu_);
      ++jobs_;
    }
    boost::asio::post(pool_, [this, session = std::move(session), snap = std::move(snap)] {
      run_job(*session, snap);
      std::lock_guard lock(jobs_mu_);
      if (--jobs_ == 0) jobs_cv_.notify_all();
    });
  }

  void run_job(Session& s, const Conversation& snap) {
    const std::size_t index = snap.utterances.size() - 1;
    {
      std::lock_guard lock(s.mu);
      if (s.transcript.size() - 1 != index) return;  // already stale
    }
    SuggestionSet set;
    try {
      set = suggester_(snap);
    } catch (const std::exception&) {
      return;
    }
    set.for_utterance_index = index;

    std::lock_guard lock(s.mu);
    if (s.transcript.size() - 1 != index || !s.counselor) return;
    LiveSuggestions live{index, {}};
    Json items = Json::array();
    for (std::size_t k = 0; k < set.items.size(); ++k) {
      const Suggestion& item = set.items[k];
      std::string id = std::to_string(index) + "-" + std::to_string(k);
      items.push_back(Json{{"id", id},
                           {"strategy", to_string(item.strategy)},
                           {"description", description(item.strategy)},
                           {"text", item.text},
                           {"probability", item.probability}});
      live.items.emplace_back(std::move(id), item);
    }
    s.live = std::move(live);
    const Json payload{{"for_utterance_index", index}, {"items", items}};
    s.counselor->conn->send(frame::kSuggestions, payload);
    log(s, EventType::SuggestionsShown, payload);
  }

  Suggester suggester_;
  HubConfig cfg_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<const Connection*, Binding> bindings_;
  std::mt19937_64 id_rng_{std::random_device{}()};

  std::mutex jobs_mu_;
  std::condition_variable jobs_cv_;
  std::size_t jobs_ = 0;
  boost::asio::thread_pool pool_;
};

}  // namespace care::server

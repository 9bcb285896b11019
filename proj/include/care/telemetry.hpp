#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "care/domain.hpp"
#include "care/errors.hpp"
#include "care/lcs.hpp"
#include "care/stats.hpp"
#include "care/text.hpp"

namespace care {

enum class EventType : std::uint8_t {
  Message,
  SuggestionsShown,
  PanelToggle,
  SuggestionClick,
  Typing,
  Join,
  Leave,
};

constexpr std::string_view to_string(EventType t) noexcept {
  switch (t) {
    case EventType::Message: return "message";
    case EventType::SuggestionsShown: return "suggestions_shown";
    case EventType::PanelToggle: return "panel_toggle";
    case EventType::SuggestionClick: return "suggestion_click";
    case EventType::Typing: return "typing";
    case EventType::Join: return "join";
    case EventType::Leave: return "leave";
  }
  return "unknown";
}

inline std::optional<EventType> parse_event_type(std::string_view s) noexcept {
  for (auto t : {EventType::Message, EventType::SuggestionsShown, EventType::PanelToggle,
                 EventType::SuggestionClick, EventType::Typing, EventType::Join,
                 EventType::Leave}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

struct EventRecord {
  std::int64_t ts_ms = 0;
  std::string session_id;
  EventType event_type = EventType::Message;
  Json payload = Json::object();

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

inline void to_json(Json& j, const EventRecord& e) {
  j = Json{{"ts_ms", e.ts_ms},
           {"session_id", e.session_id},
           {"event_type", to_string(e.event_type)},
           {"payload", e.payload}};
}

inline void from_json(const Json& j, EventRecord& e) {
  e.ts_ms = j.at("ts_ms").get<std::int64_t>();
  e.session_id = j.at("session_id").get<std::string>();
  auto t = parse_event_type(j.at("event_type").get<std::string>());
  if (!t) throw std::invalid_argument("unknown event_type");
  e.event_type = *t;
  e.payload = j.value("payload", Json::object());
}

/// Writes one JSON line and flushes it.
inline void append_event(std::ostream& sink, const EventRecord& e) {
  sink << Json(e).dump() << '\n';
  sink.flush();
  if (!sink) throw IoError("event sink not writable");
}

/// Append-only per-session log file. Timestamps are clamped so they never
/// decrease within the file.
class EventLog {
 public:
  explicit EventLog(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::app) {
    if (!out_) throw IoError("cannot open event log " + path.string());
  }

  void append(EventRecord e) {
    std::lock_guard lock(mu_);
    e.ts_ms = std::max(e.ts_ms, last_ts_);
    last_ts_ = e.ts_ms;
    append_event(out_, e);
  }

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mu_;
  std::int64_t last_ts_ = 0;
};

inline std::vector<EventRecord> read_events(std::istream& in) {
  std::vector<EventRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line).get<EventRecord>());
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

inline std::vector<EventRecord> load_events(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_events(in);
}

/// Every `*.jsonl` file in `dir`, in file-name order.
inline std::vector<std::vector<EventRecord>> load_log_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("log directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::vector<EventRecord>> out;
  for (const auto& f : files) {
    try {
      out.push_back(load_events(f));
    } catch (const ParseError& e) {
      throw ParseError(e.line(), f.filename().string() + ": " + e.cause());
    }
  }
  return out;
}

// ---- Edit analysis ----------------------------------------------------------

struct EditAnalysis {
  std::size_t lcs = 0;
  double ratio_vs_suggestion = 0.0;
  double ratio_vs_sent = 0.0;
  bool modified = false;
};

inline EditAnalysis edit_analysis(std::string_view clicked, std::string_view sent) {
  if (clicked.empty()) throw std::invalid_argument("clicked suggestion is empty");
  if (sent.empty()) throw EmptySent();
  const std::u32string c = to_code_points(clicked);
  const std::u32string s = to_code_points(sent);
  EditAnalysis r;
  r.lcs = lcs_length(c, s);
  r.ratio_vs_suggestion = static_cast<double>(r.lcs) / static_cast<double>(c.size());
  r.ratio_vs_sent = static_cast<double>(r.lcs) / static_cast<double>(s.size());
  r.modified = clicked != sent;
  return r;
}

// ---- Reports ----------------------------------------------------------------

/// Measures for one chat.
///
/// A counselor message counts as *assisted* when a non-empty suggestion set
/// for the current last utterance was live at send time, and as *seen* when
/// additionally the panel was visible. Click-through is clicked-and-seen
/// messages over seen messages. Edit ratios cover modified clicked sends.
struct ChatReport {
  std::string session_id;
  std::size_t counselor_messages = 0;
  std::size_t assisted = 0;
  std::size_t seen = 0;
  std::size_t clicked_seen = 0;
  std::size_t clicked_sent = 0;
  std::size_t unmodified = 0;

  double assistance_rate = 0.0;
  double panel_open_fraction = 0.0;
  double click_through_rate = 0.0;
  double unmodified_fraction = 0.0;
  std::vector<double> lcs_ratio_vs_suggestion;
  std::vector<double> lcs_ratio_vs_sent;
  std::vector<std::int64_t> counselor_lengths_with;
  std::vector<std::int64_t> counselor_lengths_without;
  std::optional<MannWhitneyResult> mann_whitney;
  bool no_opportunity = false;
};

struct AggregateReport {
  std::size_t sessions = 0;
  std::size_t counselor_messages = 0;

  double assistance_rate_pooled = 0.0;
  double click_through_rate_pooled = 0.0;
  double unmodified_fraction_pooled = 0.0;
  double panel_open_fraction_mean = 0.0;

  double assistance_rate_median = 0.0;
  double panel_open_fraction_median = 0.0;
  double click_through_rate_median = 0.0;
  double unmodified_fraction_median = 0.0;

  std::vector<double> lcs_ratio_vs_suggestion;
  std::vector<double> lcs_ratio_vs_sent;
  double lcs_ratio_vs_suggestion_median = 0.0;
  double lcs_ratio_vs_sent_median = 0.0;

  std::vector<std::int64_t> counselor_lengths_with;
  std::vector<std::int64_t> counselor_lengths_without;
  double length_with_median = 0.0;
  double length_without_median = 0.0;
  std::optional<MannWhitneyResult> mann_whitney;
};

struct AnalysisReport {
  std::vector<ChatReport> chats;
  AggregateReport aggregate;
};

namespace detail {

inline double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace detail

/// Folds one session's events (in file order) into a ChatReport.
inline ChatReport analyze_session(const std::vector<EventRecord>& events) {
  ChatReport r;
  if (!events.empty()) r.session_id = events.front().session_id;

  std::optional<std::size_t> last_index;
  std::optional<Json> live;  // suggestions for *last_index
  std::optional<std::string> pending_click;
  bool panel_visible = true;
  std::int64_t visible_ms = 0;
  const std::int64_t start = events.empty() ? 0 : events.front().ts_ms;
  std::int64_t prev_ts = start;

  for (const EventRecord& e : events) {
    if (panel_visible) visible_ms += std::max<std::int64_t>(0, e.ts_ms - prev_ts);
    prev_ts = std::max(prev_ts, e.ts_ms);
    const Json& p = e.payload;
    switch (e.event_type) {
      case EventType::PanelToggle:
        panel_visible = p.value("visible", true);
        break;
      case EventType::SuggestionsShown:
        if (last_index && p.value("for_utterance_index", std::size_t{0}) == *last_index) {
          live = p;
          pending_click.reset();
        }
        break;
      case EventType::SuggestionClick: {
        if (!live) break;
        const std::string id = p.value("suggestion_id", "");
        for (const Json& item : live->value("items", Json::array())) {
          if (item.value("id", "") == id) {
            pending_click = p.value("text", item.value("text", ""));
            break;
          }
        }
        break;
      }
      case EventType::Message: {
        const std::string text = p.value("text", "");
        if (p.value("role", "") == "counselor") {
          ++r.counselor_messages;
          const bool assisted = live && !live->value("items", Json::array()).empty();
          const bool seen = assisted && panel_visible;
          const auto len = static_cast<std::int64_t>(char_length(text));
          if (assisted) ++r.assisted;
          if (seen) {
            ++r.seen;
            r.counselor_lengths_with.push_back(len);
          } else {
            r.counselor_lengths_without.push_back(len);
          }
          if (pending_click && !pending_click->empty() && !text.empty()) {
            ++r.clicked_sent;
            if (seen) ++r.clicked_seen;
            const EditAnalysis ea = edit_analysis(*pending_click, text);
            if (ea.modified) {
              r.lcs_ratio_vs_suggestion.push_back(ea.ratio_vs_suggestion);
              r.lcs_ratio_vs_sent.push_back(ea.ratio_vs_sent);
            } else {
              ++r.unmodified;
            }
          }
        }
        last_index = p.value("index", std::size_t{0});
        live.reset();
        pending_click.reset();
        break;
      }
      case EventType::Typing:
      case EventType::Join:
      case EventType::Leave:
        break;
    }
  }

  const std::int64_t span = prev_ts - start;
  r.panel_open_fraction = span > 0 ? static_cast<double>(visible_ms) / static_cast<double>(span)
                                   : (panel_visible ? 1.0 : 0.0);
  r.no_opportunity = r.counselor_messages == 0;
  r.assistance_rate = detail::ratio(r.assisted, r.counselor_messages);
  r.click_through_rate = detail::ratio(r.clicked_seen, r.seen);
  r.unmodified_fraction = detail::ratio(r.unmodified, r.clicked_sent);
  if (!r.counselor_lengths_with.empty() && !r.counselor_lengths_without.empty()) {
    r.mann_whitney = mann_whitney_u(r.counselor_lengths_with, r.counselor_lengths_without);
  }
  return r;
}

/// Per-chat reports plus pooled totals and per-chat medians. Medians of a
/// rate only include chats where that rate's denominator is non-zero.
inline AnalysisReport analyze(const std::vector<std::vector<EventRecord>>& sessions) {
  AnalysisReport out;
  AggregateReport& a = out.aggregate;
  std::size_t assisted = 0, seen = 0, clicked_seen = 0, clicked_sent = 0, unmodified = 0;
  std::vector<double> assist_rates, panel_fracs, ctr_rates, unmod_rates;
  for (const auto& events : sessions) {
    ChatReport r = analyze_session(events);
    a.counselor_messages += r.counselor_messages;
    assisted += r.assisted;
    seen += r.seen;
    clicked_seen += r.clicked_seen;
    clicked_sent += r.clicked_sent;
    unmodified += r.unmodified;
    panel_fracs.push_back(r.panel_open_fraction);
    if (r.counselor_messages > 0) assist_rates.push_back(r.assistance_rate);
    if (r.seen > 0) ctr_rates.push_back(r.click_through_rate);
    if (r.clicked_sent > 0) unmod_rates.push_back(r.unmodified_fraction);
    a.lcs_ratio_vs_suggestion.insert(a.lcs_ratio_vs_suggestion.end(),
                                     r.lcs_ratio_vs_suggestion.begin(), r.lcs_ratio_vs_suggestion.end());
    a.lcs_ratio_vs_sent.insert(a.lcs_ratio_vs_sent.end(), r.lcs_ratio_vs_sent.begin(),
                               r.lcs_ratio_vs_sent.end());
    a.counselor_lengths_with.insert(a.counselor_lengths_with.end(), r.counselor_lengths_with.begin(),
                                    r.counselor_lengths_with.end());
    a.counselor_lengths_without.insert(a.counselor_lengths_without.end(),
                                       r.counselor_lengths_without.begin(),
                                       r.counselor_lengths_without.end());
    out.chats.push_back(std::move(r));
  }
  a.sessions = out.chats.size();
  a.assistance_rate_pooled = detail::ratio(assisted, a.counselor_messages);
  a.click_through_rate_pooled = detail::ratio(clicked_seen, seen);
  a.unmodified_fraction_pooled = detail::ratio(unmodified, clicked_sent);
  if (!panel_fracs.empty()) {
    double sum = 0.0;
    for (double f : panel_fracs) sum += f;
    a.panel_open_fraction_mean = sum / static_cast<double>(panel_fracs.size());
  }
  a.assistance_rate_median = median(assist_rates);
  a.panel_open_fraction_median = median(panel_fracs);
  a.click_through_rate_median = median(ctr_rates);
  a.unmodified_fraction_median = median(unmod_rates);
  a.lcs_ratio_vs_suggestion_median = median(a.lcs_ratio_vs_suggestion);
  a.lcs_ratio_vs_sent_median = median(a.lcs_ratio_vs_sent);
  a.length_with_median = median(a.counselor_lengths_with);
  a.length_without_median = median(a.counselor_lengths_without);
  if (!a.counselor_lengths_with.empty() && !a.counselor_lengths_without.empty()) {
    a.mann_whitney = mann_whitney_u(a.counselor_lengths_with, a.counselor_lengths_without);
  }
  return out;
}

// ---- Report output ----------------------------------------------------------

inline Json to_json(const std::optional<MannWhitneyResult>& mw) {
  if (!mw) return nullptr;
  return Json{{"U", mw->u}, {"p", mw->p}, {"exact", mw->exact}};
}

inline Json to_json(const ChatReport& r) {
  return Json{{"session_id", r.session_id},
              {"counselor_messages", r.counselor_messages},
              {"assisted", r.assisted},
              {"seen", r.seen},
              {"clicked_seen", r.clicked_seen},
              {"clicked_sent", r.clicked_sent},
              {"unmodified", r.unmodified},
              {"assistance_rate", r.assistance_rate},
              {"panel_open_fraction", r.panel_open_fraction},
              {"click_through_rate", r.click_through_rate},
              {"unmodified_fraction", r.unmodified_fraction},
              {"lcs_ratio_vs_suggestion", r.lcs_ratio_vs_suggestion},
              {"lcs_ratio_vs_sent", r.lcs_ratio_vs_sent},
              {"counselor_lengths_with", r.counselor_lengths_with},
              {"counselor_lengths_without", r.counselor_lengths_without},
              {"mann_whitney", to_json(r.mann_whitney)},
              {"no_opportunity", r.no_opportunity}};
}

inline Json to_json(const AnalysisReport& report) {
  const AggregateReport& a = report.aggregate;
  Json chats = Json::array();
  for (const auto& c : report.chats) chats.push_back(to_json(c));
  return Json{
      {"chats", chats},
      {"aggregate",
       {{"sessions", a.sessions},
        {"counselor_messages", a.counselor_messages},
        {"pooled",
         {{"assistance_rate", a.assistance_rate_pooled},
          {"click_through_rate", a.click_through_rate_pooled},
          {"unmodified_fraction", a.unmodified_fraction_pooled},
          {"panel_open_fraction_mean", a.panel_open_fraction_mean}}},
        {"median",
         {{"assistance_rate", a.assistance_rate_median},
          {"panel_open_fraction", a.panel_open_fraction_median},
          {"click_through_rate", a.click_through_rate_median},
          {"unmodified_fraction", a.unmodified_fraction_median},
          {"lcs_ratio_vs_suggestion", a.lcs_ratio_vs_suggestion_median},
          {"lcs_ratio_vs_sent", a.lcs_ratio_vs_sent_median},
          {"length_with", a.length_with_median},
          {"length_without", a.length_without_median}}},
        {"lcs_ratio_vs_suggestion", a.lcs_ratio_vs_suggestion},
        {"lcs_ratio_vs_sent", a.lcs_ratio_vs_sent},
        {"counselor_lengths_with", a.counselor_lengths_with},
        {"counselor_lengths_without", a.counselor_lengths_without},
        {"mann_whitney", to_json(a.mann_whitney)}}}};
}

inline void print_table(std::ostream& os, const AnalysisReport& report) {
  auto pct = [](double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(2) << v * 100.0 << '%';
    return ss.str();
  };
  os << std::left << std::setw(24) << "session" << std::right << std::setw(8) << "msgs"
     << std::setw(10) << "assist" << std::setw(10) << "panel" << std::setw(10) << "ctr"
     << std::setw(10) << "unmod" << '\n';
  for (const auto& c : report.chats) {
    os << std::left << std::setw(24) << c.session_id << std::right << std::setw(8)
       << c.counselor_messages << std::setw(10) << pct(c.assistance_rate) << std::setw(10)
       << pct(c.panel_open_fraction) << std::setw(10) << pct(c.click_through_rate)
       << std::setw(10) << pct(c.unmodified_fraction) << (c.no_opportunity ? "  (no opportunity)" : "")
       << '\n';
  }
  const AggregateReport& a = report.aggregate;
  os << std::left << std::setw(24) << "pooled" << std::right << std::setw(8) << a.counselor_messages
     << std::setw(10) << pct(a.assistance_rate_pooled) << std::setw(10)
     << pct(a.panel_open_fraction_mean) << std::setw(10) << pct(a.click_through_rate_pooled)
     << std::setw(10) << pct(a.unmodified_fraction_pooled) << '\n';
  os << std::left << std::setw(24) << "median (per chat)" << std::right << std::setw(8) << ""
     << std::setw(10) << pct(a.assistance_rate_median) << std::setw(10)
     << pct(a.panel_open_fraction_median) << std::setw(10) << pct(a.click_through_rate_median)
     << std::setw(10) << pct(a.unmodified_fraction_median) << '\n';
  os << "edit ratio medians: vs suggestion " << pct(a.lcs_ratio_vs_suggestion_median)
     << ", vs sent " << pct(a.lcs_ratio_vs_sent_median) << " (n=" << a.lcs_ratio_vs_suggestion.size()
     << ")\n";
  os << "length medians: with suggestions " << a.length_with_median << ", without "
     << a.length_without_median;
  if (a.mann_whitney) {
    os << "  (Mann-Whitney U=" << a.mann_whitney->u << ", p=" << a.mann_whitney->p << ")";
  }
  os << '\n';
}

}  // namespace care

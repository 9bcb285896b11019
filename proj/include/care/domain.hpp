#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "care/strategy.hpp"
#include "care/text.hpp"

namespace care {

using Json = nlohmann::json;

enum class Speaker : std::uint8_t { Seeker, Counselor };

constexpr std::string_view to_string(Speaker s) noexcept {
  return s == Speaker::Seeker ? "seeker" : "counselor";
}

inline std::optional<Speaker> parse_speaker(std::string_view s) noexcept {
  if (s == "seeker") return Speaker::Seeker;
  if (s == "counselor") return Speaker::Counselor;
  return std::nullopt;
}

/// Chat category. Anything other than the two named kinds keeps its label.
class Category {
 public:
  enum class Kind : std::uint8_t { Anxiety, RelationshipStress, Other };

  Category() = default;
  static Category anxiety() { return Category(Kind::Anxiety, {}); }
  static Category relationship_stress() {
    return Category(Kind::RelationshipStress, {});
  }
  static Category other(std::string label) {
    return Category(Kind::Other, std::move(label));
  }

  static Category parse(std::string_view s) {
    if (s == "anxiety") return anxiety();
    if (s == "relationship_stress") return relationship_stress();
    return other(std::string(s));
  }

  Kind kind() const noexcept { return kind_; }

  std::string str() const {
    switch (kind_) {
      case Kind::Anxiety: return "anxiety";
      case Kind::RelationshipStress: return "relationship_stress";
      case Kind::Other: return label_;
    }
    return label_;
  }

  friend bool operator==(const Category&, const Category&) = default;

 private:
  Category(Kind k, std::string label) : kind_(k), label_(std::move(label)) {}

  Kind kind_ = Kind::Other;
  std::string label_;
};

struct Utterance {
  std::size_t index = 0;
  Speaker speaker = Speaker::Seeker;
  std::string text;
  StrategySet strategies;
  std::optional<std::int64_t> timestamp_ms;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Conversation {
  std::string conversation_id;
  Category category;
  std::optional<int> rating;
  std::vector<Utterance> utterances;

  friend bool operator==(const Conversation&, const Conversation&) = default;

  std::size_t size() const noexcept { return utterances.size(); }

  /// Appends with the next index; strategies are dropped for seekers.
  Utterance& append(Speaker who, std::string text, StrategySet strategies = {},
                    std::optional<std::int64_t> ts = std::nullopt) {
    if (who == Speaker::Seeker) strategies.clear();
    utterances.push_back(
        Utterance{utterances.size(), who, std::move(text), strategies, ts});
    return utterances.back();
  }
};

/// Throws std::invalid_argument describing the first violated invariant.
inline void validate(const Conversation& c) {
  if (c.rating && (*c.rating < 1 || *c.rating > 5)) {
    throw std::invalid_argument("rating out of range [1,5]");
  }
  for (std::size_t i = 0; i < c.utterances.size(); ++i) {
    const Utterance& u = c.utterances[i];
    if (u.index != i) {
      throw std::invalid_argument("utterance indices must be consecutive from 0");
    }
    if (u.text.empty()) throw std::invalid_argument("utterance text is empty");
    if (u.speaker == Speaker::Seeker && !u.strategies.empty()) {
      throw std::invalid_argument("seeker utterance carries strategy labels");
    }
  }
}

inline constexpr std::size_t kMaxContext = 5;

/// The most recent (at most five) utterances, oldest first.
class Context {
 public:
  Context() = default;

  explicit Context(std::vector<Utterance> utterances)
      : utterances_(std::move(utterances)) {
    if (utterances_.size() > kMaxContext) {
      utterances_.erase(utterances_.begin(),
                        utterances_.end() - static_cast<std::ptrdiff_t>(kMaxContext));
    }
  }

  /// Up to `len` utterances immediately preceding position `end` (exclusive).
  static Context preceding(std::span<const Utterance> all, std::size_t end,
                           std::size_t len = kMaxContext) {
    len = std::min(len, kMaxContext);
    end = std::min(end, all.size());
    const std::size_t begin = end > len ? end - len : 0;
    return Context(std::vector<Utterance>(all.begin() + static_cast<std::ptrdiff_t>(begin),
                                          all.begin() + static_cast<std::ptrdiff_t>(end)));
  }

  static Context last(const Conversation& c, std::size_t len = kMaxContext) {
    return preceding(c.utterances, c.utterances.size(), len);
  }

  /// This context followed by one more utterance, re-trimmed to five.
  Context extended(Speaker who, std::string text) const {
    std::vector<Utterance> next = utterances_;
    const std::size_t idx = next.empty() ? 0 : next.back().index + 1;
    next.push_back(Utterance{idx, who, std::move(text), {}, std::nullopt});
    return Context(std::move(next));
  }

  const std::vector<Utterance>& utterances() const noexcept { return utterances_; }
  std::size_t size() const noexcept { return utterances_.size(); }
  bool empty() const noexcept { return utterances_.empty(); }

  friend bool operator==(const Context&, const Context&) = default;

 private:
  std::vector<Utterance> utterances_;
};

struct Suggestion {
  Strategy strategy = Strategy::OpenQuestion;
  std::string text;
  double probability = 0.0;

  friend bool operator==(const Suggestion&, const Suggestion&) = default;
};

inline constexpr std::size_t kMaxSuggestions = 3;

struct SuggestionSet {
  std::size_t for_utterance_index = 0;
  std::vector<Suggestion> items;

  friend bool operator==(const SuggestionSet&, const SuggestionSet&) = default;
};

/// Probability descending, then strategy enum order.
inline bool ranks_before(const Suggestion& a, const Suggestion& b) noexcept {
  if (a.probability != b.probability) return a.probability > b.probability;
  return ordinal(a.strategy) < ordinal(b.strategy);
}

// ---- JSON -------------------------------------------------------------------

inline void to_json(Json& j, const StrategySet& set) {
  j = Json::array();
  set.for_each([&](Strategy s) { j.push_back(to_string(s)); });
}

inline void from_json(const Json& j, StrategySet& set) {
  set.clear();
  for (const auto& item : j) {
    auto s = parse_strategy(item.get<std::string>());
    if (!s) throw std::invalid_argument("unknown strategy '" + item.get<std::string>() + "'");
    set.insert(*s);
  }
}

inline void to_json(Json& j, const Utterance& u) {
  j = Json{{"index", u.index},
           {"speaker", to_string(u.speaker)},
           {"text", u.text},
           {"strategies", u.strategies},
           {"timestamp_ms", u.timestamp_ms ? Json(*u.timestamp_ms) : Json(nullptr)}};
}

inline void from_json(const Json& j, Utterance& u) {
  u.index = j.at("index").get<std::size_t>();
  auto sp = parse_speaker(j.at("speaker").get<std::string>());
  if (!sp) throw std::invalid_argument("unknown speaker");
  u.speaker = *sp;
  u.text = j.at("text").get<std::string>();
  u.strategies = j.contains("strategies") && !j["strategies"].is_null()
                     ? j["strategies"].get<StrategySet>()
                     : StrategySet{};
  if (j.contains("timestamp_ms") && !j["timestamp_ms"].is_null()) {
    u.timestamp_ms = j["timestamp_ms"].get<std::int64_t>();
  } else {
    u.timestamp_ms.reset();
  }
}

inline void to_json(Json& j, const Conversation& c) {
  j = Json{{"conversation_id", c.conversation_id},
           {"category", c.category.str()},
           {"rating", c.rating ? Json(*c.rating) : Json(nullptr)},
           {"utterances", c.utterances}};
}

inline void from_json(const Json& j, Conversation& c) {
  c.conversation_id = j.at("conversation_id").get<std::string>();
  c.category = Category::parse(j.at("category").get<std::string>());
  if (j.contains("rating") && !j["rating"].is_null()) {
    c.rating = j["rating"].get<int>();
  } else {
    c.rating.reset();
  }
  c.utterances = j.at("utterances").get<std::vector<Utterance>>();
}

inline void to_json(Json& j, const Suggestion& s) {
  j = Json{{"strategy", to_string(s.strategy)},
           {"text", s.text},
           {"probability", s.probability}};
}

inline void from_json(const Json& j, Suggestion& s) {
  auto st = parse_strategy(j.at("strategy").get<std::string>());
  if (!st) throw std::invalid_argument("unknown strategy");
  s.strategy = *st;
  s.text = j.at("text").get<std::string>();
  s.probability = j.at("probability").get<double>();
}

inline void to_json(Json& j, const SuggestionSet& s) {
  j = Json{{"for_utterance_index", s.for_utterance_index}, {"items", s.items}};
}

inline void from_json(const Json& j, SuggestionSet& s) {
  s.for_utterance_index = j.at("for_utterance_index").get<std::size_t>();
  s.items = j.at("items").get<std::vector<Suggestion>>();
}

}  // namespace care

#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string_view>

namespace care {

// Order is significant: it is the tie-break order used when ranking.
enum class Strategy : std::uint8_t {
  OpenQuestion,
  ClosedQuestion,
  PersuadeWithPermission,
  Reflection,
  Support,
  IntroductionGreeting,
  Grounding,
  Affirm,
};

inline constexpr std::size_t kStrategyCount = 8;

inline constexpr std::array<Strategy, kStrategyCount> kAllStrategies = {
    Strategy::OpenQuestion,         Strategy::ClosedQuestion,
    Strategy::PersuadeWithPermission, Strategy::Reflection,
    Strategy::Support,              Strategy::IntroductionGreeting,
    Strategy::Grounding,            Strategy::Affirm,
};

constexpr std::size_t ordinal(Strategy s) noexcept {
  return static_cast<std::size_t>(s);
}

namespace detail {

struct StrategyInfo {
  std::string_view key;
  std::string_view display;
  std::string_view description;
};

inline constexpr std::array<StrategyInfo, kStrategyCount> kStrategyInfo = {{
    {"open_question", "Open Question",
     "Open-ended questions that leave room for a response."},
    {"closed_question", "Closed Question",
     "Questions with short specific answer."},
    {"persuade_with_permission", "Persuade with Permission",
     "Counselor explicitly tries to change member's opinions, attitudes, or "
     "behavior based on logical arguments and facts. Counselor asks for "
     "permission first or emphasizes collaboration."},
    {"reflection", "Reflection",
     "Counselor captures the implicit meaning and feelings of client "
     "statements and returns it to the client through rephrases."},
    {"support", "Support",
     "Sympathetic, compassionate, or understanding comments encouraging "
     "client behavior."},
    {"introduction_greeting", "Introduction or Greeting",
     "Counselor and seeker greet each other, exchange names etc."},
    {"grounding", "Grounding",
     "Counselor facilitates conversation through acknowledgements."},
    {"affirm", "Affirm", "Counselor compliments the seeker."},
}};

}  // namespace detail

/// snake_case wire name, e.g. "open_question".
constexpr std::string_view to_string(Strategy s) noexcept {
  return detail::kStrategyInfo[ordinal(s)].key;
}

constexpr std::string_view display_name(Strategy s) noexcept {
  return detail::kStrategyInfo[ordinal(s)].display;
}

/// One-sentence description shown as the strategy tooltip.
constexpr std::string_view description(Strategy s) noexcept {
  return detail::kStrategyInfo[ordinal(s)].description;
}

constexpr std::optional<Strategy> parse_strategy(std::string_view key) noexcept {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == key) return s;
  }
  return std::nullopt;
}

/// Set of strategies; iteration is always in enum order.
class StrategySet {
 public:
  StrategySet() = default;
  StrategySet(std::initializer_list<Strategy> items) {
    for (Strategy s : items) insert(s);
  }

  void insert(Strategy s) noexcept { bits_.set(ordinal(s)); }
  void erase(Strategy s) noexcept { bits_.reset(ordinal(s)); }
  void clear() noexcept { bits_.reset(); }
  bool contains(Strategy s) const noexcept { return bits_.test(ordinal(s)); }
  bool empty() const noexcept { return bits_.none(); }
  std::size_t size() const noexcept { return bits_.count(); }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (Strategy s : kAllStrategies) {
      if (contains(s)) fn(s);
    }
  }

  friend bool operator==(const StrategySet&, const StrategySet&) = default;

 private:
  std::bitset<kStrategyCount> bits_;
};

/// Fixed-size value per strategy, indexed by Strategy.
template <class T>
class PerStrategy {
 public:
  PerStrategy() = default;
  explicit PerStrategy(const T& fill) { values_.fill(fill); }

  T& operator[](Strategy s) noexcept { return values_[ordinal(s)]; }
  const T& operator[](Strategy s) const noexcept { return values_[ordinal(s)]; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const PerStrategy&, const PerStrategy&) = default;

 private:
  std::array<T, kStrategyCount> values_{};
};

}  // namespace care

#include <gtest/gtest.h>

#include <set>

#include "care/domain.hpp"
#include "care/strategy.hpp"
#include "care/text.hpp"

using namespace care;

TEST(Strategy, EightMembersInTableOrder) {
  ASSERT_EQ(kAllStrategies.size(), 8u);
  EXPECT_EQ(kAllStrategies.front(), Strategy::OpenQuestion);
  EXPECT_EQ(kAllStrategies.back(), Strategy::Affirm);
  for (std::size_t i = 0; i < kAllStrategies.size(); ++i) EXPECT_EQ(ordinal(kAllStrategies[i]), i);
}

TEST(Strategy, NamesRoundTripAndDescriptionsPresent) {
  std::set<std::string_view> keys;
  for (Strategy s : kAllStrategies) {
    EXPECT_EQ(parse_strategy(to_string(s)), s);
    EXPECT_FALSE(description(s).empty());
    EXPECT_FALSE(display_name(s).empty());
    keys.insert(to_string(s));
  }
  EXPECT_EQ(keys.size(), 8u);
  EXPECT_EQ(to_string(Strategy::PersuadeWithPermission), "persuade_with_permission");
  EXPECT_EQ(to_string(Strategy::IntroductionGreeting), "introduction_greeting");
  EXPECT_FALSE(parse_strategy("empathy").has_value());
}

TEST(StrategySet, IteratesInEnumOrder) {
  StrategySet s{Strategy::Affirm, Strategy::OpenQuestion, Strategy::Support};
  std::vector<Strategy> seen;
  s.for_each([&](Strategy x) { seen.push_back(x); });
  EXPECT_EQ(seen, (std::vector<Strategy>{Strategy::OpenQuestion, Strategy::Support, Strategy::Affirm}));
  s.erase(Strategy::Support);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_FALSE(s.contains(Strategy::Support));
}

TEST(Text, Normalize) {
  EXPECT_EQ(normalize_text("  Hello   WORLD "), "hello world");
  EXPECT_EQ(normalize_text(""), "");
  EXPECT_EQ(normalize_text("Don't  worry"), "don't worry");
  EXPECT_EQ(normalize_text("a\t\nb"), "a b");
  // Decomposed e + combining acute composes to U+00E9.
  EXPECT_EQ(normalize_text("Cafe\xCC\x81"), "caf\xC3\xA9");
  EXPECT_EQ(normalize_text("\xC3\x89T\xC3\x89"), "\xC3\xA9t\xC3\xA9");
}

TEST(Text, Tokenize) {
  using V = std::vector<std::string>;
  EXPECT_EQ(tokenize("how are you?"), (V{"how", "are", "you"}));
  EXPECT_EQ(tokenize(""), V{});
  EXPECT_EQ(tokenize("it's ok-ish"), (V{"it's", "ok", "ish"}));
  EXPECT_EQ(tokenize("it\xE2\x80\x99s fine"), (V{"it's", "fine"}));
  EXPECT_EQ(tokenize("'quoted' words"), (V{"quoted", "words"}));
  EXPECT_EQ(tokenize("Exam 2 in 3 DAYS!!"), (V{"exam", "2", "in", "3", "days"}));
}

TEST(Text, CodePointLength) {
  EXPECT_EQ(char_length("abc"), 3u);
  EXPECT_EQ(char_length("caf\xC3\xA9"), 4u);
  EXPECT_EQ(char_length("\xF0\x9F\x99\x82"), 1u);
}

namespace {

Conversation sample() {
  Conversation c;
  c.conversation_id = "c-1";
  c.category = Category::relationship_stress();
  c.rating = 5;
  c.append(Speaker::Seeker, "hi", {}, 1000);
  c.append(Speaker::Counselor, "Hello, welcome!", {Strategy::IntroductionGreeting}, 2000);
  c.append(Speaker::Seeker, "my partner and I keep fighting");
  c.append(Speaker::Counselor, "That sounds exhausting.", {Strategy::Reflection, Strategy::Support});
  return c;
}

}  // namespace

TEST(Conversation, AppendAssignsIndicesAndDropsSeekerLabels) {
  Conversation c;
  c.append(Speaker::Seeker, "x", {Strategy::Affirm});
  c.append(Speaker::Counselor, "y", {Strategy::Affirm});
  EXPECT_EQ(c.utterances[0].index, 0u);
  EXPECT_EQ(c.utterances[1].index, 1u);
  EXPECT_TRUE(c.utterances[0].strategies.empty());
  EXPECT_TRUE(c.utterances[1].strategies.contains(Strategy::Affirm));
}

TEST(Conversation, ValidateRejectsBrokenInvariants) {
  Conversation c = sample();
  EXPECT_NO_THROW(validate(c));
  c.rating = 6;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = sample();
  c.utterances[2].index = 5;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = sample();
  c.utterances[0].strategies.insert(Strategy::Support);
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = sample();
  c.utterances[1].text.clear();
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(Conversation, JsonRoundTrip) {
  const Conversation c = sample();
  const std::string bytes = Json(c).dump();
  const Conversation back = Json::parse(bytes).get<Conversation>();
  EXPECT_EQ(back, c);
  EXPECT_EQ(Json(back).dump(), bytes);

  const Json j = Json::parse(bytes);
  EXPECT_EQ(j["category"], "relationship_stress");
  EXPECT_EQ(j["utterances"][3]["strategies"], (Json{"reflection", "support"}));
  EXPECT_EQ(j["utterances"][0]["speaker"], "seeker");
  EXPECT_EQ(j["utterances"][0]["timestamp_ms"], 1000);
  EXPECT_TRUE(j["utterances"][2]["timestamp_ms"].is_null());
}

TEST(Conversation, OtherCategoryAndMissingRating) {
  Conversation c = sample();
  c.category = Category::other("grief");
  c.rating.reset();
  const Conversation back = Json::parse(Json(c).dump()).get<Conversation>();
  EXPECT_EQ(back.category.str(), "grief");
  EXPECT_FALSE(back.rating.has_value());
}

TEST(Context, KeepsAtMostFiveMostRecent) {
  Conversation c;
  for (int i = 0; i < 8; ++i) c.append(i % 2 ? Speaker::Counselor : Speaker::Seeker, "u" + std::to_string(i));
  const Context ctx = Context::last(c);
  ASSERT_EQ(ctx.size(), 5u);
  EXPECT_EQ(ctx.utterances().front().index, 3u);
  EXPECT_EQ(ctx.utterances().back().index, 7u);

  const Context before = Context::preceding(c.utterances, 3);
  ASSERT_EQ(before.size(), 3u);
  EXPECT_EQ(before.utterances().back().index, 2u);

  const Context ext = ctx.extended(Speaker::Counselor, "next");
  ASSERT_EQ(ext.size(), 5u);
  EXPECT_EQ(ext.utterances().front().index, 4u);
  EXPECT_EQ(ext.utterances().back().text, "next");
}

TEST(SuggestionSet, JsonRoundTripAndRanking) {
  SuggestionSet s;
  s.for_utterance_index = 4;
  s.items = {{Strategy::Reflection, "It sounds hard.", 0.8}, {Strategy::Support, "I'm here.", 0.8}};
  const SuggestionSet back = Json::parse(Json(s).dump()).get<SuggestionSet>();
  EXPECT_EQ(back, s);
  EXPECT_TRUE(ranks_before(s.items[0], s.items[1]));
  EXPECT_FALSE(ranks_before(s.items[1], s.items[0]));
  EXPECT_TRUE(ranks_before({Strategy::Affirm, "a", 0.9}, {Strategy::OpenQuestion, "b", 0.6}));
}

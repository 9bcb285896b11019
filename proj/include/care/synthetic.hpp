#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "care/domain.hpp"
#include "care/rng.hpp"

// Synthetic practice-chat corpus for demos and tests. Each conversation has
// one theme strategy: seeker turns carry cue phrases for it and every
// counselor turn is a template of that strategy, so the label is
// recoverable from lexical content alone.

namespace care::synthetic {

struct Options {
  std::size_t conversations_per_strategy = 60;
  std::size_t min_counselor_turns = 4;
  std::size_t max_counselor_turns = 6;
  /// Chance that a non-first seeker turn is generic filler instead of a cue.
  double filler_rate = 0.3;
  /// Chance that a conversation is rated 4 instead of 5.
  double low_rating_rate = 0.1;
  std::uint64_t seed = 1;
};

namespace detail {

inline constexpr std::array<std::string_view, 6> kAnxietyTopics = {
    "my upcoming exam", "the job interview", "my presentation at work",
    "my test results",  "moving to a new city", "finals week"};

inline constexpr std::array<std::string_view, 6> kRelationshipTopics = {
    "my partner",     "my girlfriend", "my boyfriend",
    "my best friend", "my parents",    "my roommate"};

using Templates = std::vector<std::string_view>;

inline const PerStrategy<Templates>& seeker_cues() {
  static const PerStrategy<Templates> t = [] {
    PerStrategy<Templates> m;
    m[Strategy::OpenQuestion] = {
        "it is complicated with {t} and hard to explain",
        "i do not know where to begin with {t}",
        "things with {t} are complicated right now",
        "honestly it is hard to explain what is going on with {t}"};
    m[Strategy::ClosedQuestion] = {
        "i already mentioned {t} to someone last week",
        "i maybe talked to someone about {t} already",
        "i think i already told my teacher about {t}",
        "someone already knows about {t} i think"};
    m[Strategy::PersuadeWithPermission] = {
        "do you have any advice about {t}",
        "i need some ideas for dealing with {t}",
        "any suggestions on how to handle {t}",
        "what advice would you give about {t}"};
    m[Strategy::Reflection] = {
        "i feel so overwhelmed and exhausted by {t}",
        "{t} leaves me drained and overwhelmed every day",
        "i am exhausted and i feel drained because of {t}",
        "everything about {t} makes me feel overwhelmed"};
    m[Strategy::Support] = {
        "nobody cares about me and i feel alone with {t}",
        "i feel so lonely dealing with {t}",
        "i am all alone with {t} and nobody listens",
        "it feels lonely and nobody understands {t}"};
    m[Strategy::IntroductionGreeting] = {
        "hi there, first time here, it is about {t}",
        "hello, i am new here and wanted to talk about {t}",
        "hey, this is my first time using this",
        "hi, hello, i just joined to talk about {t}"};
    m[Strategy::Grounding] = {
        "my heart is racing and i cannot breathe when i think about {t}",
        "i am shaking and panicking about {t}",
        "i am in a panic, my chest is tight over {t}",
        "my hands are shaking and my heart is racing"};
    m[Strategy::Affirm] = {
        "i finally managed to deal with {t} today",
        "i made some progress with {t} this week",
        "i actually managed to talk about {t} finally",
        "i made real progress and finally handled {t}"};
    return m;
  }();
  return t;
}

inline const PerStrategy<Templates>& counselor_templates() {
  static const PerStrategy<Templates> t = [] {
    PerStrategy<Templates> m;
    m[Strategy::OpenQuestion] = {
        "What feels most difficult about {t} for you right now?",
        "How has {t} been affecting your day to day life?",
        "Could you tell me more about what is happening with {t}?",
        "What would you like to be different about {t}?"};
    m[Strategy::ClosedQuestion] = {
        "Is {t} coming up this week?",
        "Have you spoken with anyone else about {t}?",
        "Did that happen recently?",
        "Are you safe right now?"};
    m[Strategy::PersuadeWithPermission] = {
        "Would it be okay if I shared an idea that has helped others with {t}?",
        "If you are open to it, I could suggest a small step for {t}.",
        "May I offer a suggestion that might help with {t}?",
        "Would you be open to trying a technique that others found useful?"};
    m[Strategy::Reflection] = {
        "It sounds like {t} has left you feeling really worn down.",
        "You seem to be carrying a lot of worry about {t}.",
        "It sounds like you feel stuck between what you want and what {t} demands.",
        "So {t} is weighing on you and draining your energy."};
    m[Strategy::Support] = {
        "I am here for you and you do not have to face {t} alone.",
        "That sounds really hard, and I am glad you reached out.",
        "I hear you, and I am here to listen for as long as you need.",
        "You are not alone in this, I am right here with you."};
    m[Strategy::IntroductionGreeting] = {
        "Hi, welcome! I am glad you are here today.",
        "Hello and welcome, my name is Sam and I am a listener here.",
        "Hey there, thanks for stopping by, nice to meet you.",
        "Welcome, it is nice to meet you, I am Alex."};
    m[Strategy::Grounding] = {
        "Let us take a slow breath together, in for four and out for four.",
        "Try noticing five things you can see around you right now.",
        "Feel your feet on the floor and take a deep breath with me.",
        "Let us pause and slowly breathe in, hold, and breathe out."};
    m[Strategy::Affirm] = {
        "That took real courage, and you should be proud of yourself.",
        "You have shown a lot of strength in handling {t}.",
        "Great job taking that step, it really shows your determination.",
        "That is a real accomplishment, well done for sticking with it."};
    return m;
  }();
  return t;
}

inline constexpr std::array<std::string_view, 8> kFiller = {
    "yeah, {t} has been on my mind a lot",
    "i guess so",
    "thanks for listening",
    "okay, that makes sense",
    "i am not sure, maybe",
    "it has been like this for a while with {t}",
    "right, i see what you mean",
    "mm, i suppose that is true"};

inline std::string fill(std::string_view tmpl, std::string_view topic) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl.compare(i, 3, "{t}") == 0) {
      out += topic;
      i += 2;
    } else {
      out += tmpl[i];
    }
  }
  return out;
}

template <class Seq>
std::string_view pick_from(Rng& rng, const Seq& seq) {
  return seq[static_cast<std::size_t>(rng.below(seq.size()))];
}

}  // namespace detail

/// One conversation whose counselor turns all use `theme`.
inline Conversation make_conversation(Strategy theme, std::string id, Rng& rng,
                                      const Options& opt = {}) {
  Conversation c;
  c.conversation_id = std::move(id);
  const bool anxiety = rng.below(2) == 0;
  c.category = anxiety ? Category::anxiety() : Category::relationship_stress();
  c.rating = rng.uniform() < opt.low_rating_rate ? 4 : 5;
  const std::string topic(anxiety ? detail::pick_from(rng, detail::kAnxietyTopics)
                                  : detail::pick_from(rng, detail::kRelationshipTopics));
  const std::size_t span = opt.max_counselor_turns - opt.min_counselor_turns + 1;
  const std::size_t turns = opt.min_counselor_turns + static_cast<std::size_t>(rng.below(span));
  StrategySet label;
  label.insert(theme);
  for (std::size_t k = 0; k < turns; ++k) {
    const bool filler = k > 0 && rng.uniform() < opt.filler_rate;
    const std::string_view st = filler ? detail::pick_from(rng, detail::kFiller)
                                       : detail::pick_from(rng, detail::seeker_cues()[theme]);
    c.append(Speaker::Seeker, detail::fill(st, topic));
    c.append(Speaker::Counselor,
             detail::fill(detail::pick_from(rng, detail::counselor_templates()[theme]), topic), label);
  }
  return c;
}

/// Interleaved themes: conversation i has theme i mod 8.
inline std::vector<Conversation> make_corpus(const Options& opt = {}) {
  Rng rng(opt.seed);
  std::vector<Conversation> out;
  const std::size_t total = opt.conversations_per_strategy * kStrategyCount;
  out.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    out.push_back(make_conversation(kAllStrategies[i % kStrategyCount], id, rng, opt));
  }
  return out;
}

}  // namespace care::synthetic

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "helpers.hpp"

using namespace care;
using testing_support::TempDir;
using testing_support::write_text;

namespace {

Conversation conv(std::string id, std::optional<int> rating, std::size_t n = 4) {
  Conversation c;
  c.conversation_id = std::move(id);
  c.category = Category::anxiety();
  c.rating = rating;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 2 == 0) c.append(Speaker::Seeker, "seeker line " + std::to_string(i));
    else c.append(Speaker::Counselor, "counselor line " + std::to_string(i), {Strategy::Support});
  }
  return c;
}

std::vector<TrainingInstance> instances(std::size_t pos, std::size_t neg) {
  std::vector<TrainingInstance> out;
  for (std::size_t i = 0; i < pos + neg; ++i) {
    TrainingInstance t;
    t.response = "r" + std::to_string(i);
    t.strategy = Strategy::Support;
    // Interleave so order preservation is observable.
    t.label = i % 5 == 0 ? (i / 5 < pos) : false;
    out.push_back(t);
  }
  // Top up positives if interleaving did not place them all.
  std::size_t have = 0;
  for (auto& t : out) have += t.label;
  for (auto& t : out) {
    if (have >= pos) break;
    if (!t.label) {
      t.label = true;
      ++have;
    }
  }
  return out;
}

std::size_t count_labels(const std::vector<TrainingInstance>& v, bool label) {
  return static_cast<std::size_t>(
      std::count_if(v.begin(), v.end(), [&](const auto& t) { return t.label == label; }));
}

}  // namespace

TEST(LoadCorpus, ThreeValidLines) {
  TempDir dir;
  std::ostringstream os;
  write_corpus(os, {conv("a", 5), conv("b", 4), conv("c", std::nullopt)});
  write_text(dir / "c.jsonl", os.str());
  const auto convs = load_corpus(dir / "c.jsonl");
  ASSERT_EQ(convs.size(), 3u);
  EXPECT_EQ(convs[1].conversation_id, "b");
  EXPECT_EQ(convs[1], conv("b", 4));
}

TEST(LoadCorpus, MalformedLineReportsItsNumber) {
  TempDir dir;
  std::ostringstream os;
  write_corpus(os, {conv("a", 5)});
  os << "{not json\n";
  write_corpus(os, {conv("c", 5)});
  write_text(dir / "c.jsonl", os.str());
  try {
    load_corpus(dir / "c.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadCorpus, InvalidConversationIsAParseError) {
  TempDir dir;
  write_text(dir / "c.jsonl",
             R"({"conversation_id":"x","category":"anxiety","rating":9,"utterances":[]})"
             "\n");
  EXPECT_THROW(load_corpus(dir / "c.jsonl"), ParseError);
}

TEST(LoadCorpus, EmptyFileAndMissingFile) {
  TempDir dir;
  write_text(dir / "empty.jsonl", "");
  EXPECT_TRUE(load_corpus(dir / "empty.jsonl").empty());
  EXPECT_THROW(load_corpus(dir / "absent.jsonl"), IoError);
}

TEST(LoadCorpus, SaveLoadRoundTrip) {
  TempDir dir;
  const std::vector<Conversation> in = {conv("a", 5, 7), conv("b", std::nullopt, 2)};
  save_corpus(dir / "c.jsonl", in);
  EXPECT_EQ(load_corpus(dir / "c.jsonl"), in);
}

TEST(FilterHighQuality, Ratings) {
  const std::vector<Conversation> in = {conv("a", 5), conv("b", 4), conv("c", 5),
                                        conv("d", std::nullopt)};
  const auto out = filter_high_quality(in, 5);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].conversation_id, "a");
  EXPECT_EQ(out[1].conversation_id, "c");

  const std::vector<Conversation> rated = {conv("a", 5), conv("b", 1), conv("c", 3)};
  EXPECT_EQ(filter_high_quality(rated, 1), rated);

  EXPECT_TRUE(filter_high_quality({conv("a", std::nullopt), conv("b", std::nullopt)}, 1).empty());
  EXPECT_THROW(filter_high_quality(in, 0), std::invalid_argument);
}

TEST(BuildInstances, SingleCounselorUtterance) {
  Conversation c;
  c.append(Speaker::Seeker, "one");
  c.append(Speaker::Seeker, "two");
  c.append(Speaker::Seeker, "three");
  c.append(Speaker::Counselor, "I'm here", {Strategy::Support});

  const auto pos = build_instances({c}, Strategy::Support);
  ASSERT_EQ(pos.size(), 1u);
  EXPECT_TRUE(pos[0].label);
  ASSERT_EQ(pos[0].context.size(), 3u);
  EXPECT_EQ(pos[0].context.utterances()[0].index, 0u);
  EXPECT_EQ(pos[0].context.utterances()[2].index, 2u);
  EXPECT_EQ(pos[0].response, "I'm here");

  const auto neg = build_instances({c}, Strategy::Affirm);
  ASSERT_EQ(neg.size(), 1u);
  EXPECT_FALSE(neg[0].label);
}

TEST(BuildInstances, NoContextNoInstanceAndLengthLimit) {
  Conversation c;
  c.append(Speaker::Counselor, "hello", {Strategy::IntroductionGreeting});
  EXPECT_TRUE(build_instances({c}, Strategy::IntroductionGreeting).empty());

  const Conversation long_conv = conv("x", 5, 12);
  const auto inst = build_instances({long_conv}, Strategy::Support, 2);
  ASSERT_EQ(inst.size(), 6u);
  for (const auto& t : inst) EXPECT_LE(t.context.size(), 2u);
  EXPECT_THROW(build_instances({c}, Strategy::Support, 0), std::invalid_argument);
  EXPECT_THROW(build_instances({c}, Strategy::Support, 6), std::invalid_argument);
}

TEST(Downsample, BalancesToPositiveCount) {
  const auto in = instances(10, 40);
  const auto out = downsample_negatives(in, 7);
  EXPECT_EQ(count_labels(out, true), 10u);
  EXPECT_EQ(count_labels(out, false), 10u);
  // Output is an order-preserving subsequence of the input.
  std::size_t j = 0;
  for (const auto& t : in) {
    if (j < out.size() && t == out[j]) ++j;
  }
  EXPECT_EQ(j, out.size());
  EXPECT_EQ(downsample_negatives(in, 7), out);
}

TEST(Downsample, FewerNegativesUnchangedAndNoPositives) {
  const auto in = instances(10, 4);
  EXPECT_EQ(downsample_negatives(in, 1), in);
  EXPECT_TRUE(downsample_negatives(instances(0, 12), 1).empty());
  EXPECT_TRUE(downsample_negatives({}, 1).empty());
}

TEST(Split, SizesAndDisjointness) {
  std::vector<Conversation> in;
  for (int i = 0; i < 10; ++i) in.push_back(conv("c" + std::to_string(i), 5));
  SplitSpec spec;
  spec.seed = 42;
  const CorpusSplit s = split(in, spec);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.dev.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  std::set<std::string> ids;
  for (const auto* part : {&s.train, &s.dev, &s.test}) {
    for (const auto& c : *part) ids.insert(c.conversation_id);
  }
  EXPECT_EQ(ids.size(), 10u);
}

TEST(Split, EmptyDeterministicAndValidated) {
  const CorpusSplit e = split({}, SplitSpec{});
  EXPECT_TRUE(e.train.empty() && e.dev.empty() && e.test.empty());

  std::vector<Conversation> in;
  for (int i = 0; i < 37; ++i) in.push_back(conv("c" + std::to_string(i), 5));
  const CorpusSplit a = split(in, SplitSpec{});
  const CorpusSplit b = split(in, SplitSpec{});
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.dev, b.dev);
  EXPECT_EQ(a.test, b.test);
  SplitSpec other;
  other.seed = 43;
  EXPECT_NE(split(in, other).test, a.test);

  SplitSpec bad;
  bad.train_ratio = 0.9;
  EXPECT_THROW(split(in, bad), std::invalid_argument);
  bad = SplitSpec{};
  bad.dev_ratio = 0.0;
  bad.train_ratio = 0.9;
  EXPECT_THROW(split(in, bad), std::invalid_argument);
}

TEST(AutoLabel, RecoversSyntheticLabels) {
  const auto& w = testing_support::synthetic_world();
  // Strip labels from held-out conversations and relabel them.
  std::vector<Conversation> stripped = w.split.test;
  for (auto& c : stripped) {
    for (auto& u : c.utterances) u.strategies.clear();
  }
  const auto labeled = auto_label(stripped, w.bundle.predictor);
  std::size_t counselor = 0, recovered = 0;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    for (std::size_t k = 0; k < labeled[i].utterances.size(); ++k) {
      const Utterance& u = labeled[i].utterances[k];
      if (u.speaker != Speaker::Counselor) continue;
      ++counselor;
      const Strategy truth = [&] {
        Strategy t{};
        w.split.test[i].utterances[k].strategies.for_each([&](Strategy s) { t = s; });
        return t;
      }();
      recovered += u.strategies.contains(truth);
    }
  }
  ASSERT_GT(counselor, 0u);
  EXPECT_GE(static_cast<double>(recovered) / static_cast<double>(counselor), 0.9);
}

TEST(AutoLabel, OpenQuestionMarker) {
  const auto& w = testing_support::synthetic_world();
  Conversation c;
  c.append(Speaker::Seeker, "i do not know where to begin with my partner");
  c.append(Speaker::Counselor, "What feels most difficult about my partner for you right now?");
  const auto out = auto_label({c}, w.bundle.predictor);
  EXPECT_TRUE(out[0].utterances[1].strategies.contains(Strategy::OpenQuestion));
}

TEST(AutoLabel, NoCounselorUnchangedAndIdempotent) {
  const auto& w = testing_support::synthetic_world();
  Conversation seeker_only;
  seeker_only.append(Speaker::Seeker, "hello");
  seeker_only.append(Speaker::Seeker, "anyone there?");
  EXPECT_EQ(auto_label({seeker_only}, w.bundle.predictor)[0], seeker_only);

  const std::vector<Conversation> some(w.split.dev.begin(), w.split.dev.begin() + 10);
  const auto once = auto_label(some, w.bundle.predictor);
  EXPECT_EQ(auto_label(once, w.bundle.predictor), once);
}

TEST(AutoLabel, PreserveLabelsKeepsHumanAnnotations) {
  const auto& w = testing_support::synthetic_world();
  Conversation c;
  c.append(Speaker::Seeker, "i feel so lonely dealing with finals week");
  c.append(Speaker::Counselor, "I am here for you and you do not have to face finals week alone.",
           {Strategy::Grounding});
  EXPECT_EQ(auto_label({c}, w.bundle.predictor, true)[0], c);
  const auto relabeled = auto_label({c}, w.bundle.predictor, false)[0];
  EXPECT_FALSE(relabeled.utterances[1].strategies.contains(Strategy::Grounding));
  EXPECT_TRUE(relabeled.utterances[1].strategies.contains(Strategy::Support));
}

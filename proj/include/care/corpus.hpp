#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "care/domain.hpp"
#include "care/errors.hpp"
#include "care/models.hpp"
#include "care/rng.hpp"

namespace care {

struct TrainingInstance {
  Context context;
  std::string response;
  Strategy strategy = Strategy::OpenQuestion;
  bool label = false;

  friend bool operator==(const TrainingInstance&, const TrainingInstance&) = default;
};

struct SplitSpec {
  double train_ratio = 0.8;
  double dev_ratio = 0.1;
  double test_ratio = 0.1;
  std::uint64_t seed = 42;

  void validate() const {
    if (!(train_ratio > 0 && dev_ratio > 0 && test_ratio > 0)) {
      throw std::invalid_argument("split ratios must be positive");
    }
    if (std::abs(train_ratio + dev_ratio + test_ratio - 1.0) > 1e-9) {
      throw std::invalid_argument("split ratios must sum to 1");
    }
  }
};

struct CorpusSplit {
  std::vector<Conversation> train;
  std::vector<Conversation> dev;
  std::vector<Conversation> test;
};

// ---- IO ---------------------------------------------------------------------

/// Parses JSONL; blank lines are skipped. Reports the 1-based line on error.
inline std::vector<Conversation> read_corpus(std::istream& in) {
  std::vector<Conversation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Conversation c = Json::parse(line).get<Conversation>();
      validate(c);
      out.push_back(std::move(c));
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

inline std::vector<Conversation> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return read_corpus(in);
}

inline void write_corpus(std::ostream& out, const std::vector<Conversation>& convs) {
  for (const Conversation& c : convs) out << Json(c).dump() << '\n';
}

inline void save_corpus(const std::filesystem::path& path,
                        const std::vector<Conversation>& convs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write corpus " + path.string());
  write_corpus(out, convs);
  if (!out) throw IoError("write failed for " + path.string());
}

// ---- Filtering and labeling -------------------------------------------------

inline std::vector<Conversation> filter_high_quality(
    const std::vector<Conversation>& convs, int min_rating) {
  if (min_rating < 1 || min_rating > 5) {
    throw std::invalid_argument("min_rating must be in [1,5]");
  }
  std::vector<Conversation> out;
  std::copy_if(convs.begin(), convs.end(), std::back_inserter(out),
               [&](const Conversation& c) { return c.rating && *c.rating >= min_rating; });
  return out;
}

/// Labels each counselor utterance from the window of (up to five)
/// utterances ending with it. With preserve_labels, existing non-empty
/// label sets are kept.
template <StrategyModel M>
std::vector<Conversation> auto_label(const std::vector<Conversation>& convs,
                                     const M& classifier,
                                     bool preserve_labels = false,
                                     double threshold = 0.5) {
  std::vector<Conversation> out = convs;
  for (Conversation& c : out) {
    for (Utterance& u : c.utterances) {
      if (u.speaker != Speaker::Counselor) continue;
      if (preserve_labels && !u.strategies.empty()) continue;
      const Context window = Context::preceding(c.utterances, u.index + 1);
      const StrategyProbabilities p = classifier.predict(window);
      u.strategies.clear();
      for (Strategy s : kAllStrategies) {
        if (p[s] > threshold) u.strategies.insert(s);
      }
    }
  }
  return out;
}

// ---- Instances --------------------------------------------------------------

/// One instance per counselor utterance that has at least one predecessor.
inline std::vector<TrainingInstance> build_instances(
    const std::vector<Conversation>& convs, Strategy strategy,
    std::size_t context_len = kMaxContext) {
  if (context_len < 1 || context_len > kMaxContext) {
    throw std::invalid_argument("context_len must be in [1,5]");
  }
  std::vector<TrainingInstance> out;
  for (const Conversation& c : convs) {
    for (const Utterance& u : c.utterances) {
      if (u.speaker != Speaker::Counselor || u.index == 0) continue;
      out.push_back(TrainingInstance{
          Context::preceding(c.utterances, u.index, context_len), u.text,
          strategy, u.strategies.contains(strategy)});
    }
  }
  return out;
}

/// Keeps every positive and a uniform sample of min(#neg, #pos) negatives.
/// Relative input order is preserved.
inline std::vector<TrainingInstance> downsample_negatives(
    const std::vector<TrainingInstance>& instances, std::uint64_t seed) {
  std::vector<std::size_t> negatives;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].label) {
      ++positives;
    } else {
      negatives.push_back(i);
    }
  }
  const std::size_t keep = std::min(positives, negatives.size());
  Rng rng(seed);
  // Partial Fisher-Yates: the first `keep` slots become the sample.
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(negatives.size() - i));
    std::swap(negatives[i], negatives[j]);
  }
  std::vector<bool> selected(instances.size(), false);
  for (std::size_t i = 0; i < keep; ++i) selected[negatives[i]] = true;

  std::vector<TrainingInstance> out;
  out.reserve(positives + keep);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].label || selected[i]) out.push_back(instances[i]);
  }
  return out;
}

// ---- Splitting --------------------------------------------------------------

/// Sizes by largest remainder, so each is within one of n * ratio.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
  const std::array<double, 3> ratios = {spec.train_ratio, spec.dev_ratio, spec.test_ratio};
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = static_cast<double>(n) * ratios[k];
    sizes[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    frac[k] = exact - static_cast<double>(sizes[k]);
    assigned += sizes[k];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < 3; ++k) {
      if (frac[k] > frac[best]) best = k;
    }
    ++sizes[best];
    frac[best] = -1.0;
    ++assigned;
  }
  return sizes;
}

/// Conversation-level partition. Members of each part keep input order.
inline CorpusSplit split(const std::vector<Conversation>& convs, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> order(convs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(order);

  const auto sizes = split_sizes(convs.size(), spec);
  std::vector<int> part(convs.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    part[order[i]] = i < sizes[0] ? 0 : (i < sizes[0] + sizes[1] ? 1 : 2);
  }
  CorpusSplit out;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    (part[i] == 0 ? out.train : part[i] == 1 ? out.dev : out.test).push_back(convs[i]);
  }
  return out;
}

inline Json split_manifest(const CorpusSplit& s, const SplitSpec& spec) {
  auto ids = [](const std::vector<Conversation>& v) {
    Json a = Json::array();
    for (const auto& c : v) a.push_back(c.conversation_id);
    return a;
  };
  return Json{{"seed", spec.seed},
              {"ratios",
               {{"train", spec.train_ratio}, {"dev", spec.dev_ratio}, {"test", spec.test_ratio}}},
              {"ids_per_split", {{"train", ids(s.train)}, {"dev", ids(s.dev)}, {"test", ids(s.test)}}}};
}

}  // namespace care

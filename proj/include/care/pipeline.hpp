#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "care/domain.hpp"
#include "care/models.hpp"
#include "care/safety.hpp"
#include "care/text.hpp"

namespace care {

struct PipelineConfig {
  double confidence_threshold = 0.5;
  std::size_t max_suggestions = kMaxSuggestions;
  std::size_t min_utterances = 5;
  std::size_t context_len = kMaxContext;

  void validate() const {
    if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
      throw std::invalid_argument("confidence_threshold must be in [0,1]");
    }
    if (max_suggestions < 1 || max_suggestions > kMaxSuggestions) {
      throw std::invalid_argument("max_suggestions must be in [1,3]");
    }
    if (min_utterances < 1) throw std::invalid_argument("min_utterances must be positive");
    if (context_len < 1 || context_len > kMaxContext) {
      throw std::invalid_argument("context_len must be in [1,5]");
    }
  }
};

/// Strategies strictly above the threshold, most probable first (ties in
/// enum order), at most `max_suggestions` of them.
inline std::vector<std::pair<Strategy, double>> select_strategies(const StrategyProbabilities& p,
                                                                  const PipelineConfig& cfg) {
  std::vector<std::pair<Strategy, double>> out;
  for (Strategy s : kAllStrategies) {
    if (p[s] > cfg.confidence_threshold) out.emplace_back(s, p[s]);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (out.size() > cfg.max_suggestions) out.resize(cfg.max_suggestions);
  return out;
}

/// Keeps the first (highest ranked) item of each normalized text.
inline std::vector<Suggestion> dedup_suggestions(std::vector<Suggestion> items) {
  std::stable_sort(items.begin(), items.end(), ranks_before);
  std::unordered_set<std::string> seen;
  std::vector<Suggestion> out;
  for (Suggestion& s : items) {
    if (seen.insert(normalize_text(s.text)).second) out.push_back(std::move(s));
  }
  return out;
}

inline bool long_enough(const Conversation& c, const PipelineConfig& cfg) {
  return c.utterances.size() >= cfg.min_utterances;
}

inline bool should_offer(const Conversation& c, const StrategyProbabilities& p,
                         const PipelineConfig& cfg) {
  if (!long_enough(c, cfg)) return false;
  for (double v : p) {
    if (v > cfg.confidence_threshold) return true;
  }
  return false;
}

template <StrategyModel M>
bool should_offer(const Conversation& c, const M& model, const PipelineConfig& cfg) {
  if (!long_enough(c, cfg)) return false;
  return should_offer(c, model.predict(Context::last(c, cfg.context_len)), cfg);
}

/// Predict, generate per confident strategy, filter, dedup, rank.
template <StrategyModel M, ResponseModel G>
SuggestionSet suggest(const Conversation& conversation, const M& predictor, const G& generator,
                      const SafetyFilter& safety, const PipelineConfig& cfg = {}) {
  cfg.validate();
  SuggestionSet out;
  out.for_utterance_index = conversation.utterances.empty() ? 0 : conversation.utterances.size() - 1;
  if (!long_enough(conversation, cfg)) return out;

  const Context ctx = Context::last(conversation, cfg.context_len);
  const StrategyProbabilities probs = predictor.predict(ctx);

  std::vector<Suggestion> candidates;
  for (const auto& [strategy, p] : select_strategies(probs, cfg)) {
    if (auto text = generator.generate(ctx, strategy)) {
      candidates.push_back(Suggestion{strategy, std::move(*text), p});
    }
  }
  out.items = dedup_suggestions(filter_suggestions(candidates, safety));
  return out;
}

}  // namespace care

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "care/classify.hpp"
#include "care/domain.hpp"
#include "care/errors.hpp"
#include "care/models.hpp"
#include "care/text.hpp"

namespace care {

struct GenerationConfig {
  std::size_t max_chars = 200;
  double min_similarity = 0.0;
  std::uint64_t seed = 0;
};

struct IndexEntry {
  SparseVector features;  // L2-normalized TF-IDF of the context
  std::string response;
  Strategy strategy = Strategy::OpenQuestion;

  friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

/// Retrieval index of (context, response, strategy) triples.
class GeneratorIndex {
 public:
  GeneratorIndex() = default;
  GeneratorIndex(std::vector<std::string> terms, std::vector<double> idf,
                 std::vector<IndexEntry> entries, std::string version)
      : terms_(std::move(terms)), idf_(std::move(idf)), entries_(std::move(entries)),
        version_(std::move(version)) {
    if (terms_.size() != idf_.size()) throw std::invalid_argument("idf/term size mismatch");
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      term_index_.emplace(terms_[i], static_cast<std::uint32_t>(i));
    }
    for (const auto& e : entries_) {
      if (e.response.empty()) throw std::invalid_argument("index entry with empty response");
    }
  }

  /// Normalized TF-IDF vector of the context; unknown tokens dropped.
  SparseVector vectorize(const Context& ctx) const {
    std::map<std::uint32_t, double> tf;
    for (const Utterance& u : ctx.utterances()) {
      for (const std::string& t : tokenize(u.text)) {
        auto it = term_index_.find(t);
        if (it != term_index_.end()) tf[it->second] += 1.0;
      }
    }
    SparseVector v;
    double norm = 0.0;
    for (auto& [i, c] : tf) {
      const double w = c * idf_[i];
      v.entries.emplace_back(i, w);
      norm += w * w;
    }
    if (norm > 0) {
      norm = std::sqrt(norm);
      for (auto& e : v.entries) e.second /= norm;
    }
    return v;
  }

  const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const std::vector<double>& idf() const noexcept { return idf_; }
  const std::string& version() const noexcept { return version_; }
  bool empty() const noexcept { return entries_.empty(); }

  std::size_t count(Strategy s) const {
    return static_cast<std::size_t>(std::count_if(
        entries_.begin(), entries_.end(), [s](const IndexEntry& e) { return e.strategy == s; }));
  }

  friend bool operator==(const GeneratorIndex& a, const GeneratorIndex& b) {
    return a.terms_ == b.terms_ && a.idf_ == b.idf_ && a.entries_ == b.entries_ &&
           a.version_ == b.version_;
  }

 private:
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::vector<IndexEntry> entries_;
  std::string version_;
  std::unordered_map<std::string, std::uint32_t> term_index_;
};

inline double cosine(const SparseVector& a, const SparseVector& b) noexcept {
  double dot = 0.0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      dot += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return dot;
}

/// One entry per (labeled counselor utterance, label). Contexts are the
/// preceding `context_len` utterances; idf is smoothed over those contexts.
inline GeneratorIndex build_index(const std::vector<Conversation>& convs,
                                  std::size_t context_len = kMaxContext,
                                  std::string version = "retrieval-1") {
  struct Doc {
    std::vector<std::string> tokens;
    std::string response;
    StrategySet labels;
  };
  std::vector<Doc> docs;
  for (const Conversation& c : convs) {
    for (const Utterance& u : c.utterances) {
      if (u.speaker != Speaker::Counselor || u.strategies.empty()) continue;
      if (normalize_text(u.text).empty()) continue;
      const auto first = u.text.find_first_not_of(" \t\r\n");
      const auto last = u.text.find_last_not_of(" \t\r\n");
      Doc d{{}, u.text.substr(first, last - first + 1), u.strategies};
      const Context ctx = Context::preceding(c.utterances, u.index, context_len);
      for (const Utterance& p : ctx.utterances()) {
        for (auto& t : tokenize(p.text)) d.tokens.push_back(std::move(t));
      }
      docs.push_back(std::move(d));
    }
  }
  if (docs.empty()) throw EmptyCorpus();

  std::map<std::string, std::size_t> df;
  for (const Doc& d : docs) {
    for (const std::string& t : std::set<std::string>(d.tokens.begin(), d.tokens.end())) ++df[t];
  }
  std::vector<std::string> terms;
  std::vector<double> idf;
  std::unordered_map<std::string, std::uint32_t> id;
  const double n = static_cast<double>(docs.size());
  for (const auto& [t, f] : df) {
    id.emplace(t, static_cast<std::uint32_t>(terms.size()));
    terms.push_back(t);
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(f))) + 1.0);
  }

  std::vector<IndexEntry> entries;
  for (const Doc& d : docs) {
    std::map<std::uint32_t, double> tf;
    for (const std::string& t : d.tokens) tf[id.at(t)] += 1.0;
    SparseVector v;
    double norm = 0.0;
    for (auto& [i, c] : tf) {
      v.entries.emplace_back(i, c * idf[i]);
      norm += v.entries.back().second * v.entries.back().second;
    }
    if (norm > 0) {
      norm = std::sqrt(norm);
      for (auto& e : v.entries) e.second /= norm;
    }
    d.labels.for_each([&](Strategy s) { entries.push_back(IndexEntry{v, d.response, s}); });
  }
  return GeneratorIndex(std::move(terms), std::move(idf), std::move(entries), std::move(version));
}

/// Longest prefix of at most `max_chars` code points that ends where a word
/// ends (the next character is whitespace). A single word longer than the
/// limit is cut hard. Trailing whitespace is removed.
inline std::string truncate_at_word_boundary(std::string_view text, std::size_t max_chars) {
  const std::u32string cps = to_code_points(text);
  if (cps.size() <= max_chars) return std::string(text);
  std::size_t cut = 0;
  for (std::size_t k = max_chars; k >= 1; --k) {
    if (is_space(cps[k]) && !is_space(cps[k - 1])) {
      cut = k;
      break;
    }
  }
  if (cut == 0) {
    cut = max_chars;
    while (cut > 0 && is_space(cps[cut - 1])) --cut;
  }
  return to_utf8(std::u32string_view(cps).substr(0, cut));
}

/// Best-matching response among entries of `strategy`; ties go to the
/// earliest entry. nullopt when no entry qualifies.
inline std::optional<std::string> generate(const GeneratorIndex& index, const Context& ctx,
                                           Strategy strategy, const GenerationConfig& cfg = {}) {
  if (cfg.max_chars < 1) throw std::invalid_argument("max_chars must be >= 1");
  const SparseVector q = index.vectorize(ctx);
  const IndexEntry* best = nullptr;
  double best_sim = 0.0;
  for (const IndexEntry& e : index.entries()) {
    if (e.strategy != strategy) continue;
    const double sim = cosine(q, e.features);
    if (sim < cfg.min_similarity) continue;
    if (best == nullptr || sim > best_sim) {
      best = &e;
      best_sim = sim;
    }
  }
  if (best == nullptr) return std::nullopt;
  std::string out = truncate_at_word_boundary(best->response, cfg.max_chars);
  if (normalize_text(out).empty()) return std::nullopt;
  return out;
}

/// Retrieval backend bound to an index and a configuration.
class RetrievalGenerator {
 public:
  RetrievalGenerator(const GeneratorIndex& index, GenerationConfig cfg = {})
      : index_(&index), cfg_(cfg) {}

  std::optional<std::string> generate(const Context& ctx, Strategy s) const {
    return care::generate(*index_, ctx, s, cfg_);
  }

 private:
  const GeneratorIndex* index_;
  GenerationConfig cfg_;
};

/// Whether the intended strategy's classifier accepts the context followed
/// by `generated` as the counselor's reply. Empty text never qualifies.
template <StrategyModel M>
bool strategy_consistency(std::string_view generated, Strategy intended, const Context& ctx,
                          const M& predictor, double threshold = 0.5) {
  if (normalize_text(generated).empty()) return false;
  const Context window = ctx.extended(Speaker::Counselor, std::string(generated));
  return predictor.predict(window)[intended] > threshold;
}

}  // namespace care

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "care/domain.hpp"
#include "care/errors.hpp"
#include "care/text.hpp"

namespace care {

enum class SafetyReason : std::uint8_t {
  AbusiveLanguage,
  PersonalInfoInquiry,
  ExcessiveProfanity,
  ClassifierFlag,
};

constexpr std::string_view to_string(SafetyReason r) noexcept {
  switch (r) {
    case SafetyReason::AbusiveLanguage: return "abusive_language";
    case SafetyReason::PersonalInfoInquiry: return "personal_info_inquiry";
    case SafetyReason::ExcessiveProfanity: return "excessive_profanity";
    case SafetyReason::ClassifierFlag: return "classifier_flag";
  }
  return "unknown";
}

struct SafetyVerdict {
  bool allowed = true;
  std::vector<SafetyReason> reasons;
  double score = 0.0;
};

/// `lexicon_path` is a directory holding abusive.txt, profanity.txt and
/// personal_info.txt.
struct SafetyConfig {
  std::filesystem::path lexicon_path;
  double classifier_threshold = 0.3;
  int profanity_max = 0;
};

/// Optional learned scorer: probability that a text is inappropriate.
using TextScorer = std::function<double(std::string_view)>;

/// Terms and patterns from one lexicon file.
///
/// Each non-comment line is either a term or, when prefixed with "re:", an
/// ECMAScript regex applied to the normalized text. Terms match whole token
/// sequences; a trailing '*' on a term matches any token with that prefix.
class Lexicon {
 public:
  static Lexicon load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LexiconMissing("lexicon not found: " + path.string());
    Lexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      line = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
      lex.add(line, lineno);
    }
    return lex;
  }

  void add(std::string_view entry, std::size_t lineno = 0) {
    if (entry.starts_with("re:")) {
      try {
        patterns_.emplace_back(std::string(entry.substr(3)),
                               std::regex::ECMAScript | std::regex::icase |
                                   std::regex::optimize);
      } catch (const std::regex_error& e) {
        throw ParseError(lineno, std::string("bad pattern: ") + e.what());
      }
      return;
    }
    Term t;
    t.prefix = entry.ends_with('*');
    t.tokens = tokenize(t.prefix ? entry.substr(0, entry.size() - 1) : entry);
    if (!t.tokens.empty()) terms_.push_back(std::move(t));
  }

  /// Number of term occurrences plus pattern matches.
  std::size_t count_hits(const std::vector<std::string>& tokens,
                         const std::string& normalized) const {
    std::size_t hits = 0;
    for (const Term& t : terms_) {
      for (std::size_t i = 0; i + t.tokens.size() <= tokens.size(); ++i) {
        if (t.matches_at(tokens, i)) ++hits;
      }
    }
    for (const std::regex& re : patterns_) {
      hits += static_cast<std::size_t>(std::distance(
          std::sregex_iterator(normalized.begin(), normalized.end(), re), std::sregex_iterator()));
    }
    return hits;
  }

  std::size_t size() const noexcept { return terms_.size() + patterns_.size(); }

 private:
  struct Term {
    std::vector<std::string> tokens;
    bool prefix = false;

    bool matches_at(const std::vector<std::string>& text, std::size_t at) const {
      for (std::size_t k = 0; k < tokens.size(); ++k) {
        const std::string& have = text[at + k];
        const bool last = k + 1 == tokens.size();
        const bool ok = (last && prefix) ? have.starts_with(tokens[k]) : have == tokens[k];
        if (!ok) return false;
      }
      return true;
    }
  };

  std::vector<Term> terms_;
  std::vector<std::regex> patterns_;
};

/// Recall-oriented filter for candidate responses.
class SafetyFilter {
 public:
  SafetyFilter(Lexicon abusive, Lexicon profanity, Lexicon personal_info, SafetyConfig cfg,
               TextScorer classifier = {})
      : abusive_(std::move(abusive)), profanity_(std::move(profanity)),
        personal_info_(std::move(personal_info)), cfg_(std::move(cfg)),
        classifier_(std::move(classifier)) {
    if (cfg_.classifier_threshold < 0.0 || cfg_.classifier_threshold > 1.0) {
      throw std::invalid_argument("classifier_threshold must be in [0,1]");
    }
  }

  static SafetyFilter load(const SafetyConfig& cfg, TextScorer classifier = {}) {
    const auto& dir = cfg.lexicon_path;
    if (!std::filesystem::is_directory(dir)) {
      throw LexiconMissing("lexicon directory not found: " + dir.string());
    }
    return SafetyFilter(Lexicon::load(dir / "abusive.txt"), Lexicon::load(dir / "profanity.txt"),
                        Lexicon::load(dir / "personal_info.txt"), cfg, std::move(classifier));
  }

  SafetyVerdict check(std::string_view text) const {
    SafetyVerdict v;
    const std::string norm = normalize_text(text);
    const std::vector<std::string> toks = tokenize(norm);
    if (abusive_.count_hits(toks, norm) > 0) v.reasons.push_back(SafetyReason::AbusiveLanguage);
    if (personal_info_.count_hits(toks, norm) > 0) {
      v.reasons.push_back(SafetyReason::PersonalInfoInquiry);
    }
    if (profanity_.count_hits(toks, norm) > static_cast<std::size_t>(std::max(cfg_.profanity_max, 0))) {
      v.reasons.push_back(SafetyReason::ExcessiveProfanity);
    }
    if (classifier_) {
      v.score = std::clamp(classifier_(text), 0.0, 1.0);
      if (v.score >= cfg_.classifier_threshold) v.reasons.push_back(SafetyReason::ClassifierFlag);
    } else {
      v.score = v.reasons.empty() ? 0.0 : 1.0;
    }
    v.allowed = v.reasons.empty();
    return v;
  }

  bool allows(std::string_view text) const { return check(text).allowed; }

  const SafetyConfig& config() const noexcept { return cfg_; }

 private:
  Lexicon abusive_;
  Lexicon profanity_;
  Lexicon personal_info_;
  SafetyConfig cfg_;
  TextScorer classifier_;
};

/// Items whose text the filter allows, in their original order.
inline std::vector<Suggestion> filter_suggestions(const std::vector<Suggestion>& items,
                                                  const SafetyFilter& filter) {
  std::vector<Suggestion> out;
  for (const Suggestion& s : items) {
    if (filter.allows(s.text)) out.push_back(s);
  }
  return out;
}

}  // namespace care

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "care/classify.hpp"
#include "care/domain.hpp"
#include "care/generate.hpp"
#include "care/lcs.hpp"
#include "care/models.hpp"
#include "care/text.hpp"

namespace care {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline PRF make_prf(double matches, double cand_total, double ref_total) {
  PRF r;
  if (cand_total > 0) r.precision = matches / cand_total;
  if (ref_total > 0) r.recall = matches / ref_total;
  if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

inline NgramCounts ngram_counts(const std::vector<std::string>& toks, std::size_t n) {
  NgramCounts out;
  if (n == 0 || toks.size() < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++out[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                   toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

struct ClippedCount {
  std::size_t matches = 0;
  std::size_t total = 0;  // candidate n-grams
};

/// Candidate n-grams matched against the reference, each clipped at its
/// reference count.
inline ClippedCount clipped_ngrams(const std::vector<std::string>& cand,
                                   const std::vector<std::string>& ref, std::size_t n) {
  ClippedCount c;
  const NgramCounts rc = ngram_counts(ref, n);
  for (const auto& [gram, count] : ngram_counts(cand, n)) {
    c.total += count;
    auto it = rc.find(gram);
    if (it != rc.end()) c.matches += std::min(count, it->second);
  }
  return c;
}

inline PRF rouge_n(std::string_view candidate, std::string_view reference, std::size_t n) {
  if (n < 1) throw std::invalid_argument("rouge_n: n must be >= 1");
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.size() < n || ref.size() < n) return {};
  const ClippedCount c = clipped_ngrams(cand, ref, n);
  return make_prf(static_cast<double>(c.matches), static_cast<double>(c.total),
                  static_cast<double>(ref.size() - n + 1));
}

inline PRF rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.empty() || ref.empty()) return {};
  const auto l = static_cast<double>(lcs_length(cand, ref));
  return make_prf(l, static_cast<double>(cand.size()), static_cast<double>(ref.size()));
}

/// Sentence BLEU against one reference: geometric mean of clipped n-gram
/// precisions for n = 1..max_n with brevity penalty. Orders above one use
/// add-one smoothing; unigram precision is unsmoothed.
inline double bleu(std::string_view candidate, std::string_view reference, std::size_t max_n = 4) {
  if (max_n < 1) throw std::invalid_argument("bleu: max_n must be >= 1");
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const ClippedCount c = clipped_ngrams(cand, ref, n);
    double p;
    if (n == 1) {
      if (c.matches == 0) return 0.0;
      p = static_cast<double>(c.matches) / static_cast<double>(c.total);
    } else {
      p = (static_cast<double>(c.matches) + 1.0) / (static_cast<double>(c.total) + 1.0);
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

/// Optional embedding-based similarity (e.g. BERTScore); not provided here.
using SemanticSimilarity = std::function<double(std::string_view candidate, std::string_view reference)>;

struct GenEvalRow {
  std::optional<Strategy> strategy;  // nullopt for the overall row
  std::size_t n = 0;
  double avg_words = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double bleu = 0.0;
  double positive_rate = 0.0;
  std::optional<double> semantic;
};

struct GenEvalResult {
  std::vector<GenEvalRow> rows;
  std::vector<std::string> warnings;
};

/// Scores one generation per (labeled counselor utterance, label) in `test`
/// against the true response. Missing generations score zero.
template <StrategyModel M>
GenEvalResult evaluate_generation(const GeneratorIndex& index, const M& predictor,
                                  const std::vector<Conversation>& test,
                                  const GenerationConfig& cfg = {},
                                  const SemanticSimilarity& semantic = {}) {
  struct Acc {
    std::size_t n = 0;
    double words = 0, r1 = 0, r2 = 0, rl = 0, bl = 0, pos = 0, sem = 0;
    void add(const Acc& o) {
      n += o.n;
      words += o.words;
      r1 += o.r1;
      r2 += o.r2;
      rl += o.rl;
      bl += o.bl;
      pos += o.pos;
      sem += o.sem;
    }
  };
  PerStrategy<Acc> acc;
  for (const Conversation& c : test) {
    for (const Utterance& u : c.utterances) {
      if (u.speaker != Speaker::Counselor || u.index == 0 || u.strategies.empty()) continue;
      const Context ctx = Context::preceding(c.utterances, u.index);
      u.strategies.for_each([&](Strategy s) {
        Acc& a = acc[s];
        ++a.n;
        const std::optional<std::string> gen = generate(index, ctx, s, cfg);
        if (!gen) return;
        a.words += static_cast<double>(tokenize(*gen).size());
        a.r1 += rouge_n(*gen, u.text, 1).f1;
        a.r2 += rouge_n(*gen, u.text, 2).f1;
        a.rl += rouge_l(*gen, u.text).f1;
        a.bl += bleu(*gen, u.text);
        if (strategy_consistency(*gen, s, ctx, predictor)) a.pos += 1.0;
        if (semantic) a.sem += semantic(*gen, u.text);
      });
    }
  }

  auto row = [&](std::optional<Strategy> s, const Acc& a) {
    const double n = static_cast<double>(a.n);
    GenEvalRow r;
    r.strategy = s;
    r.n = a.n;
    r.avg_words = a.words / n;
    r.rouge1 = a.r1 / n;
    r.rouge2 = a.r2 / n;
    r.rougeL = a.rl / n;
    r.bleu = a.bl / n;
    r.positive_rate = a.pos / n;
    if (semantic) r.semantic = a.sem / n;
    return r;
  };

  GenEvalResult out;
  Acc total;
  for (Strategy s : kAllStrategies) {
    if (acc[s].n == 0) {
      out.warnings.push_back("no test instances for strategy " + std::string(to_string(s)) +
                             "; row omitted");
      continue;
    }
    out.rows.push_back(row(s, acc[s]));
    total.add(acc[s]);
  }
  if (total.n > 0) out.rows.push_back(row(std::nullopt, total));
  return out;
}

inline std::string row_label(const GenEvalRow& r) {
  return r.strategy ? std::string(to_string(*r.strategy)) : std::string("overall");
}

inline void write_generation_tsv(std::ostream& os, const GenEvalResult& res) {
  os << "strategy\tn\tavg_words\trouge1\trouge2\trougeL\tbleu\tpositive\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& r : res.rows) {
    os << row_label(r) << '\t' << r.n << '\t' << r.avg_words << '\t' << r.rouge1 << '\t'
       << r.rouge2 << '\t' << r.rougeL << '\t' << r.bleu << '\t' << r.positive_rate << '\n';
  }
  os.unsetf(std::ios::floatfield);
}

inline Json generation_json(const GenEvalResult& res) {
  Json rows = Json::array();
  for (const auto& r : res.rows) {
    Json j{{"strategy", row_label(r)}, {"n", r.n},           {"avg_words", r.avg_words},
           {"rouge1", r.rouge1},       {"rouge2", r.rouge2}, {"rougeL", r.rougeL},
           {"bleu", r.bleu},           {"positive", r.positive_rate}};
    if (r.semantic) j["semantic"] = *r.semantic;
    rows.push_back(std::move(j));
  }
  return Json{{"rows", rows}, {"warnings", res.warnings}};
}

inline void write_classifier_tsv(std::ostream& os, const PerStrategy<ClassifierMetrics>& m) {
  os << "strategy\tn\taccuracy\tprecision\trecall\tf1\n";
  os << std::fixed << std::setprecision(4);
  for (Strategy s : kAllStrategies) {
    const auto& x = m[s];
    os << to_string(s) << '\t' << x.n << '\t' << x.accuracy << '\t' << x.precision << '\t'
       << x.recall << '\t' << x.f1 << '\n';
  }
  os.unsetf(std::ios::floatfield);
}

inline Json classifier_json(const PerStrategy<ClassifierMetrics>& m) {
  Json rows = Json::array();
  for (Strategy s : kAllStrategies) {
    const auto& x = m[s];
    rows.push_back(Json{{"strategy", to_string(s)}, {"n", x.n}, {"accuracy", x.accuracy},
                        {"precision", x.precision}, {"recall", x.recall}, {"f1", x.f1},
                        {"tp", x.tp}, {"fp", x.fp}, {"fn", x.fn}, {"tn", x.tn}});
  }
  return rows;
}

}  // namespace care

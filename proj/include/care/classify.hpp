#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "care/corpus.hpp"
#include "care/domain.hpp"
#include "care/errors.hpp"
#include "care/models.hpp"
#include "care/rng.hpp"
#include "care/text.hpp"

namespace care {

inline constexpr std::string_view kSeekerTag = "<seeker>";
inline constexpr std::string_view kCounselorTag = "<counselor>";

/// Speaker-tagged token stream of a context, oldest utterance first.
inline std::vector<std::string> tagged_tokens(const Context& ctx) {
  std::vector<std::string> out;
  for (const Utterance& u : ctx.utterances()) {
    out.emplace_back(u.speaker == Speaker::Seeker ? kSeekerTag : kCounselorTag);
    for (auto& t : tokenize(u.text)) out.push_back(std::move(t));
  }
  return out;
}

/// Unigram and bigram terms (bigrams joined by a single space).
inline std::vector<std::string> feature_terms(const Context& ctx) {
  const std::vector<std::string> toks = tagged_tokens(ctx);
  std::vector<std::string> terms = toks;
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    terms.push_back(toks[i] + ' ' + toks[i + 1]);
  }
  return terms;
}

struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;  // sorted by index

  bool empty() const noexcept { return entries.empty(); }
  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

class Vocabulary {
 public:
  Vocabulary() = default;

  /// Terms are indexed in the given order.
  explicit Vocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
    index_.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (!index_.emplace(terms_[i], static_cast<std::uint32_t>(i)).second) {
        throw std::invalid_argument("duplicate vocabulary term '" + terms_[i] + "'");
      }
    }
  }

  /// Terms seen at least min_freq times, most frequent first, ties broken
  /// lexicographically, capped at max_size.
  static Vocabulary build(const std::vector<Context>& contexts, std::size_t min_freq = 2,
                          std::size_t max_size = 50000) {
    std::unordered_map<std::string, std::size_t> freq;
    for (const Context& c : contexts) {
      for (auto& t : feature_terms(c)) ++freq[std::move(t)];
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [term, n] : freq) {
      if (n >= min_freq) kept.emplace_back(term, n);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (kept.size() > max_size) kept.resize(max_size);
    std::vector<std::string> terms;
    terms.reserve(kept.size());
    for (auto& [term, n] : kept) terms.push_back(std::move(term));
    return Vocabulary(std::move(terms));
  }

  std::optional<std::uint32_t> find(const std::string& term) const {
    auto it = index_.find(term);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.terms_ == b.terms_; }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Bag of unigram+bigram counts over the tagged context; unknown terms dropped.
inline SparseVector featurize(const Context& ctx, const Vocabulary& vocab) {
  if (vocab.empty()) throw std::invalid_argument("featurize: empty vocabulary");
  std::map<std::uint32_t, double> counts;
  for (const std::string& t : feature_terms(ctx)) {
    if (auto id = vocab.find(t)) counts[*id] += 1.0;
  }
  SparseVector v;
  v.entries.assign(counts.begin(), counts.end());
  return v;
}

inline double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Logistic scorer over a fixed-width feature space.
struct LinearScorer {
  std::vector<float> weights;
  float bias = 0.0f;

  double logit(const SparseVector& x) const noexcept {
    double z = bias;
    for (const auto& [i, v] : x.entries) {
      if (i < weights.size()) z += static_cast<double>(weights[i]) * v;
    }
    return z;
  }
  double score(const SparseVector& x) const noexcept { return sigmoid(logit(x)); }

  friend bool operator==(const LinearScorer&, const LinearScorer&) = default;
};

struct TrainHyper {
  int epochs = 200;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

/// Eight independent logistic scorers sharing one vocabulary.
class StrategyPredictor {
 public:
  StrategyPredictor() = default;
  StrategyPredictor(Vocabulary vocab, PerStrategy<LinearScorer> scorers, std::string version)
      : vocab_(std::move(vocab)), scorers_(std::move(scorers)), version_(std::move(version)),
        trained_(true) {
    for (const LinearScorer& s : scorers_) {
      if (s.weights.size() != vocab_.size()) {
        throw std::invalid_argument("scorer width does not match vocabulary");
      }
    }
  }

  /// Every scorer all-zero: predicts 0.5 for everything.
  static StrategyPredictor zeros(Vocabulary vocab, std::string version = "zeros") {
    PerStrategy<LinearScorer> scorers;
    for (LinearScorer& s : scorers) s.weights.assign(vocab.size(), 0.0f);
    return StrategyPredictor(std::move(vocab), std::move(scorers), std::move(version));
  }

  bool trained() const noexcept { return trained_; }

  StrategyProbabilities predict(const Context& ctx) const {
    if (!trained_) throw ModelNotTrained();
    return predict_features(featurize(ctx, vocab_));
  }

  StrategyProbabilities predict_features(const SparseVector& x) const {
    if (!trained_) throw ModelNotTrained();
    StrategyProbabilities p;
    for (Strategy s : kAllStrategies) p[s] = scorers_[s].score(x);
    return p;
  }

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const LinearScorer& scorer(Strategy s) const noexcept { return scorers_[s]; }
  LinearScorer& scorer(Strategy s) noexcept { return scorers_[s]; }
  const std::string& version() const noexcept { return version_; }

  friend bool operator==(const StrategyPredictor&, const StrategyPredictor&) = default;

 private:
  Vocabulary vocab_;
  PerStrategy<LinearScorer> scorers_;
  std::string version_;
  bool trained_ = false;
};

// ---- Training ---------------------------------------------------------------

namespace detail {

struct Dataset {
  std::vector<SparseVector> xs;
  std::vector<double> ys;
};

inline double regularized_loss(const Dataset& d, const std::vector<double>& w, double b,
                               double l2) {
  double loss = 0.0;
  for (std::size_t k = 0; k < d.xs.size(); ++k) {
    double z = b;
    for (const auto& [i, v] : d.xs[k].entries) z += w[i] * v;
    // log(1 + exp(-y'z)) with y' in {-1, +1}, computed stably.
    const double m = d.ys[k] > 0.5 ? z : -z;
    loss += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
  }
  loss /= static_cast<double>(d.xs.size());
  double sq = 0.0;
  for (double wi : w) sq += wi * wi;
  return loss + 0.5 * l2 * sq;
}

}  // namespace detail

/// Full-batch gradient descent on L2-regularized log-loss. The step halves
/// whenever it would raise the loss, so the per-epoch loss never increases.
/// `loss_history` (optional) receives the loss before training and after
/// each epoch.
inline LinearScorer train_scorer(const std::vector<SparseVector>& xs, const std::vector<bool>& ys,
                                 std::size_t dim, const TrainHyper& hyper, std::uint64_t seed,
                                 std::vector<double>* loss_history = nullptr) {
  detail::Dataset d;
  d.xs = xs;
  d.ys.reserve(ys.size());
  for (bool y : ys) d.ys.push_back(y ? 1.0 : 0.0);

  Rng rng(seed);
  std::vector<double> w(dim);
  for (double& wi : w) wi = (rng.uniform() - 0.5) * 2e-3;
  double b = 0.0;
  const double n = static_cast<double>(d.xs.size());
  double step = hyper.learning_rate;
  double loss = detail::regularized_loss(d, w, b, hyper.l2);
  if (loss_history) loss_history->push_back(loss);

  std::vector<double> grad(dim);
  std::vector<double> trial(dim);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double gb = 0.0;
    for (std::size_t k = 0; k < d.xs.size(); ++k) {
      double z = b;
      for (const auto& [i, v] : d.xs[k].entries) z += w[i] * v;
      const double r = sigmoid(z) - d.ys[k];
      for (const auto& [i, v] : d.xs[k].entries) grad[i] += r * v;
      gb += r;
    }
    for (std::size_t i = 0; i < dim; ++i) grad[i] = grad[i] / n + hyper.l2 * w[i];
    gb /= n;

    bool improved = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      for (std::size_t i = 0; i < dim; ++i) trial[i] = w[i] - step * grad[i];
      const double tb = b - step * gb;
      const double tl = detail::regularized_loss(d, trial, tb, hyper.l2);
      if (tl <= loss) {
        w.swap(trial);
        b = tb;
        loss = tl;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (loss_history) loss_history->push_back(loss);
    if (!improved) break;
  }

  LinearScorer out;
  out.weights.reserve(dim);
  for (double wi : w) out.weights.push_back(static_cast<float>(wi));
  out.bias = static_cast<float>(b);
  return out;
}

using TrainingSet = PerStrategy<std::vector<TrainingInstance>>;

inline TrainingSet group_by_strategy(const std::vector<TrainingInstance>& instances) {
  TrainingSet out;
  for (const auto& inst : instances) out[inst.strategy].push_back(inst);
  return out;
}

/// Vocabulary over every context in the training set.
inline Vocabulary training_vocabulary(const TrainingSet& data) {
  std::vector<Context> contexts;
  for (const auto& bucket : data) {
    for (const auto& inst : bucket) contexts.push_back(inst.context);
  }
  return Vocabulary::build(contexts);
}

inline StrategyPredictor train(const TrainingSet& data, const TrainHyper& hyper,
                               std::optional<Vocabulary> vocab = std::nullopt,
                               std::string version = "logreg-1") {
  for (Strategy s : kAllStrategies) {
    const auto& bucket = data[s];
    const bool has_pos = std::any_of(bucket.begin(), bucket.end(), [](auto& i) { return i.label; });
    const bool has_neg = std::any_of(bucket.begin(), bucket.end(), [](auto& i) { return !i.label; });
    if (!has_pos || !has_neg) throw InsufficientData(s);
  }
  Vocabulary v = vocab ? std::move(*vocab) : training_vocabulary(data);
  if (v.empty()) throw InsufficientData(Strategy::OpenQuestion);

  PerStrategy<LinearScorer> scorers;
  for (Strategy s : kAllStrategies) {
    std::vector<SparseVector> xs;
    std::vector<bool> ys;
    for (const auto& inst : data[s]) {
      xs.push_back(featurize(inst.context, v));
      ys.push_back(inst.label);
    }
    scorers[s] = train_scorer(xs, ys, v.size(), hyper, hyper.seed * 8 + ordinal(s));
  }
  return StrategyPredictor(std::move(v), std::move(scorers), std::move(version));
}

inline StrategyPredictor train(const std::vector<TrainingInstance>& instances,
                               const TrainHyper& hyper) {
  return train(group_by_strategy(instances), hyper);
}

// ---- Evaluation -------------------------------------------------------------

struct ClassifierMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n = 0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline ClassifierMetrics metrics_from_confusion(std::size_t tp, std::size_t fp, std::size_t fn,
                                                std::size_t tn) {
  ClassifierMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  m.n = tp + fp + fn + tn;
  if (m.n > 0) m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(m.n);
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision + m.recall > 0) {
    m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

/// Per-strategy metrics; an instance is predicted positive when its
/// probability is strictly above `threshold`.
template <StrategyModel M>
PerStrategy<ClassifierMetrics> evaluate(const M& model, const std::vector<TrainingInstance>& test,
                                        double threshold = 0.5) {
  const TrainingSet grouped = group_by_strategy(test);
  PerStrategy<ClassifierMetrics> out;
  for (Strategy s : kAllStrategies) {
    if (grouped[s].empty()) throw EmptyTestSet(s);
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (const auto& inst : grouped[s]) {
      const bool pred = model.predict(inst.context)[s] > threshold;
      if (pred && inst.label) ++tp;
      else if (pred) ++fp;
      else if (inst.label) ++fn;
      else ++tn;
    }
    out[s] = metrics_from_confusion(tp, fp, fn, tn);
  }
  return out;
}

}  // namespace care

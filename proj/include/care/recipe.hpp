#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "care/bundle.hpp"
#include "care/classify.hpp"
#include "care/corpus.hpp"
#include "care/generate.hpp"
#include "care/pipeline.hpp"
#include "care/safety.hpp"

namespace care {

struct TrainOptions {
  TrainHyper hyper;
  std::size_t context_len = kMaxContext;
  bool downsample = true;
  /// Keep only conversations rated at least this much before training.
  std::optional<int> min_rating;
};

/// Per-strategy instances, negatives downsampled with seed + ordinal.
inline TrainingSet training_set(const std::vector<Conversation>& convs, const TrainOptions& opt) {
  TrainingSet out;
  for (Strategy s : kAllStrategies) {
    auto inst = build_instances(convs, s, opt.context_len);
    out[s] = opt.downsample ? downsample_negatives(inst, opt.hyper.seed + ordinal(s)) : std::move(inst);
  }
  return out;
}

/// Classifiers plus retrieval index from one labeled corpus.
inline ModelBundle train_models(std::vector<Conversation> convs, const TrainOptions& opt = {}) {
  if (opt.min_rating) convs = filter_high_quality(convs, *opt.min_rating);
  StrategyPredictor predictor = train(training_set(convs, opt), opt.hyper);
  GeneratorIndex index = build_index(convs, opt.context_len);
  return ModelBundle{std::move(predictor), std::move(index), std::nullopt};
}

/// The full suggestion pipeline over a loaded bundle. Immutable after
/// construction, so one instance may serve every session.
class SuggestionEngine {
 public:
  SuggestionEngine(ModelBundle bundle, SafetyFilter safety, PipelineConfig pipeline = {},
                   GenerationConfig generation = {})
      : bundle_(std::make_shared<const ModelBundle>(std::move(bundle))),
        safety_(std::make_shared<const SafetyFilter>(std::move(safety))),
        pipeline_(pipeline),
        generation_(generation) {
    pipeline_.validate();
  }

  SuggestionSet operator()(const Conversation& c) const {
    const RetrievalGenerator gen(bundle_->index, generation_);
    return suggest(c, bundle_->predictor, gen, *safety_, pipeline_);
  }

  const ModelBundle& bundle() const noexcept { return *bundle_; }
  const SafetyFilter& safety() const noexcept { return *safety_; }
  const PipelineConfig& pipeline() const noexcept { return pipeline_; }

 private:
  std::shared_ptr<const ModelBundle> bundle_;
  std::shared_ptr<const SafetyFilter> safety_;
  PipelineConfig pipeline_;
  GenerationConfig generation_;
};

}  // namespace care

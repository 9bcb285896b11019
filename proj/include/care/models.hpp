#pragma once

#include <concepts>
#include <functional>
#include <optional>
#include <string>

#include "care/domain.hpp"

namespace care {

/// Independent per-strategy confidences; not a distribution.
using StrategyProbabilities = PerStrategy<double>;

/// Anything that maps a context to the eight next-strategy probabilities.
template <class M>
concept StrategyModel = requires(const M& m, const Context& ctx) {
  { m.predict(ctx) } -> std::convertible_to<StrategyProbabilities>;
};

/// Anything that proposes one response for (context, strategy), or nothing.
template <class G>
concept ResponseModel = requires(const G& g, const Context& ctx, Strategy s) {
  { g.generate(ctx, s) } -> std::convertible_to<std::optional<std::string>>;
};

/// Type-erased strategy model, e.g. for a remote inference service.
class StrategyBackend {
 public:
  using Fn = std::function<StrategyProbabilities(const Context&)>;

  StrategyBackend() = default;
  explicit StrategyBackend(Fn fn) : fn_(std::move(fn)) {}

  template <StrategyModel M>
    requires(!std::same_as<std::decay_t<M>, StrategyBackend>)
  explicit StrategyBackend(const M& model)
      : fn_([&model](const Context& c) { return model.predict(c); }) {}

  StrategyProbabilities predict(const Context& ctx) const { return fn_(ctx); }

 private:
  Fn fn_;
};

/// Type-erased response model.
class ResponseBackend {
 public:
  using Fn = std::function<std::optional<std::string>(const Context&, Strategy)>;

  ResponseBackend() = default;
  explicit ResponseBackend(Fn fn) : fn_(std::move(fn)) {}

  std::optional<std::string> generate(const Context& ctx, Strategy s) const {
    return fn_(ctx, s);
  }

 private:
  Fn fn_;
};

}  // namespace care

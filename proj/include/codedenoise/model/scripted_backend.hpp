#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "codedenoise/model/backend.hpp"

namespace codedenoise {

// Backend whose outputs are pure functions of the snippet. Used for fixtures
// and oracle comparisons.
class ScriptedBackend : public ClassifierBackend {
 public:
  using ProbabilityFn = std::function<std::vector<double>(const CodeSnippet&)>;
  using AttentionFn =
      std::function<std::vector<std::vector<double>>(const CodeSnippet&)>;

  explicit ScriptedBackend(ProbabilityFn probabilities,
                           std::optional<AttentionFn> attention = std::nullopt)
      : probabilities_(std::move(probabilities)),
        attention_(std::move(attention)) {}

  Prediction classify(const CodeSnippet& snippet) const override {
    return Prediction(probabilities_(snippet));
  }

  bool supports_attention() const override { return attention_.has_value(); }

  AttentionMap attention_weights(const CodeSnippet& snippet) const override {
    if (!attention_) return ClassifierBackend::attention_weights(snippet);
    return AttentionMap{(*attention_)(snippet)};
  }

 private:
  ProbabilityFn probabilities_;
  std::optional<AttentionFn> attention_;
};

class ScriptedFiller : public MaskFiller {
 public:
  using FillFn = std::function<std::string(const MaskedSnippet&)>;

  explicit ScriptedFiller(FillFn fill) : fill_(std::move(fill)) {}

  std::string mask_fill(const MaskedSnippet& masked) const override {
    return fill_(masked);
  }

 private:
  FillFn fill_;
};

}  // namespace codedenoise

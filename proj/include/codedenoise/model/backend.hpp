#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "codedenoise/error.hpp"
#include "codedenoise/kernel/code_snippet.hpp"
#include "codedenoise/kernel/transform.hpp"

namespace codedenoise {

inline constexpr double probability_tolerance = 1e-6;

// Class-probability vector and its argmax (lowest index wins ties).
class Prediction {
 public:
  Prediction() = default;

  // Throws a protocol error unless the entries lie in [0, 1] and sum to 1.
  explicit Prediction(std::vector<double> probabilities)
      : probabilities_(std::move(probabilities)) {
    if (probabilities_.empty()) {
      throw Error(ErrorKind::protocol, "empty probability vector");
    }
    double sum = 0.0;
    for (double p : probabilities_) {
      if (!std::isfinite(p) || p < -probability_tolerance ||
          p > 1.0 + probability_tolerance) {
        throw Error(ErrorKind::protocol, "probability outside [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > probability_tolerance) {
      throw Error(ErrorKind::protocol,
                  "probabilities sum to " + std::to_string(sum) + ", not 1");
    }
    label_ = static_cast<std::size_t>(
        std::max_element(probabilities_.begin(), probabilities_.end()) -
        probabilities_.begin());
  }

  const std::vector<double>& probabilities() const { return probabilities_; }
  std::size_t label() const { return label_; }
  std::size_t class_count() const { return probabilities_.size(); }

  double probability(std::size_t label) const {
    return label < probabilities_.size() ? probabilities_[label] : 0.0;
  }

  friend bool operator==(const Prediction&, const Prediction&) = default;

 private:
  std::vector<double> probabilities_;
  std::size_t label_ = 0;
};

// weights[layer][token]; tokens are indices into the snippet's TokenStream.
struct AttentionMap {
  std::vector<std::vector<double>> weights;

  std::size_t layers() const { return weights.size(); }
  std::size_t tokens() const { return weights.empty() ? 0 : weights[0].size(); }

  void validate(std::size_t token_count) const {
    for (const auto& layer : weights) {
      if (layer.size() != token_count) {
        throw Error(ErrorKind::structure,
                    "attention layer has " + std::to_string(layer.size()) +
                        " weights for " + std::to_string(token_count) +
                        " tokens");
      }
      for (double w : layer) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
          throw Error(ErrorKind::structure, "negative attention weight");
        }
      }
    }
  }
};

// A code classifier M. Implementations must be deterministic for a fixed
// state.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;

  virtual Prediction classify(const CodeSnippet& snippet) const = 0;

  virtual bool supports_attention() const { return false; }

  virtual AttentionMap attention_weights(const CodeSnippet&) const {
    throw Error(ErrorKind::capability, "backend does not expose attention");
  }

  // False when calls must be serialized by the caller.
  virtual bool concurrent_safe() const { return true; }
};

// Fills a masked identifier with a single name (top-1).
class MaskFiller {
 public:
  virtual ~MaskFiller() = default;

  // Throws Error(no_candidate) when no prediction is available.
  virtual std::string mask_fill(const MaskedSnippet& masked) const = 0;

  virtual bool concurrent_safe() const { return true; }
};

inline Prediction classify(const ClassifierBackend& backend,
                           const CodeSnippet& snippet) {
  return backend.classify(snippet);
}

inline AttentionMap attention_weights(const ClassifierBackend& backend,
                                      const CodeSnippet& snippet) {
  if (!backend.supports_attention()) {
    throw Error(ErrorKind::capability, "backend does not expose attention");
  }
  AttentionMap map = backend.attention_weights(snippet);
  map.validate(snippet.tokens().size());
  return map;
}

inline std::string mask_fill(const MaskFiller& model,
                             const MaskedSnippet& masked) {
  if (masked.positions.empty()) {
    throw Error(ErrorKind::validation, "masked snippet has no sentinel");
  }
  return model.mask_fill(masked);
}

// Maps backend sub-token weights onto source tokens. A sub-token belongs to
// the source token its byte span overlaps; a source token takes the max over
// its sub-tokens. Sub-tokens overlapping no source token (special positions)
// are dropped.
inline AttentionMap align_subtokens(
    const std::vector<std::vector<double>>& layer_weights,
    const std::vector<Span>& subtoken_spans, const TokenStream& tokens) {
  std::vector<std::ptrdiff_t> owner(subtoken_spans.size(), -1);
  for (std::size_t s = 0; s < subtoken_spans.size(); ++s) {
    const Span span = subtoken_spans[s];
    if (span.end <= span.begin) continue;
    auto it = std::lower_bound(
        tokens.begin(), tokens.end(), span.begin,
        [](const Token& t, std::size_t offset) { return t.span.end <= offset; });
    if (it != tokens.end() && it->span.begin < span.end) {
      owner[s] = it - tokens.begin();
    }
  }
  AttentionMap map;
  for (const auto& layer : layer_weights) {
    if (layer.size() != subtoken_spans.size()) {
      throw Error(ErrorKind::structure,
                  "attention weights and token spans differ in length");
    }
    std::vector<double> aligned(tokens.size(), 0.0);
    for (std::size_t s = 0; s < layer.size(); ++s) {
      if (owner[s] >= 0) {
        double& slot = aligned[static_cast<std::size_t>(owner[s])];
        slot = std::max(slot, layer[s]);
      }
    }
    map.weights.push_back(std::move(aligned));
  }
  return map;
}

// Per-layer weight received by each key position: mean over heads of the
// mean over query positions. attention[head][query][key].
inline std::vector<double> received_attention(
    const std::vector<std::vector<std::vector<double>>>& attention) {
  if (attention.empty() || attention[0].empty()) return {};
  const std::size_t keys = attention[0][0].size();
  std::vector<double> out(keys, 0.0);
  for (const auto& head : attention) {
    for (const auto& query : head) {
      for (std::size_t k = 0; k < keys; ++k) out[k] += query[k];
    }
  }
  const double norm =
      static_cast<double>(attention.size() * attention[0].size());
  for (double& v : out) v /= norm;
  return out;
}

// Serializes every call into a backend that is not concurrent-safe.
class SerializedBackend : public ClassifierBackend {
 public:
  explicit SerializedBackend(const ClassifierBackend& inner) : inner_(inner) {}

  Prediction classify(const CodeSnippet& snippet) const override {
    std::lock_guard lock(mutex_);
    return inner_.classify(snippet);
  }
  bool supports_attention() const override {
    return inner_.supports_attention();
  }
  AttentionMap attention_weights(const CodeSnippet& snippet) const override {
    std::lock_guard lock(mutex_);
    return inner_.attention_weights(snippet);
  }
  bool concurrent_safe() const override { return true; }

 private:
  const ClassifierBackend& inner_;
  mutable std::mutex mutex_;
};

}  // namespace codedenoise

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "codedenoise/error.hpp"
#include "codedenoise/model/backend.hpp"
#include "codedenoise/model/labeled_snippet.hpp"
#include "codedenoise/random.hpp"

namespace codedenoise {

struct ToyConfig {
  std::size_t classes = 4;
  std::size_t dim = 16;
  std::size_t buckets = 4096;
  double learning_rate = 0.05;
  std::size_t epochs = 8;
  std::uint64_t seed = 1;
  double init_scale = 0.1;
};

// Gradient of the cross-entropy loss for one example. Embedding rows are
// sparse: only buckets present in the example appear.
struct ToyGradient {
  double loss = 0.0;
  std::vector<std::pair<std::size_t, std::vector<double>>> embeddings;
  std::vector<double> query;
  std::vector<double> output;  // classes x dim, row-major
};

namespace detail {

inline void softmax_in_place(std::vector<double>& v) {
  if (v.empty()) return;
  const double top = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - top);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

}  // namespace detail

// Hash-bucketed token embeddings, one attention-pooling layer with a learned
// query, and a linear softmax head:
//   score_i = q . e_i,  a = softmax(score),  h = sum_i a_i e_i,
//   p = softmax(W h).
class ToyClassifier : public ClassifierBackend {
 public:
  struct Forward {
    std::vector<double> attention;
    std::vector<double> pooled;
    std::vector<double> probabilities;
  };

  explicit ToyClassifier(const ToyConfig& config)
      : classes_(config.classes),
        dim_(config.dim),
        buckets_(config.buckets),
        embeddings_(config.buckets * config.dim),
        query_(config.dim),
        output_(config.classes * config.dim) {
    if (classes_ < 2 || dim_ == 0 || buckets_ == 0) {
      throw Error(ErrorKind::validation, "toy classifier needs >= 2 classes");
    }
    Rng rng(config.seed);
    for (double& w : embeddings_) w = rng.normal(0.0, config.init_scale);
    for (double& w : query_) w = rng.normal(0.0, config.init_scale);
    for (double& w : output_) w = rng.normal(0.0, config.init_scale);
  }

  // All parameters zero: every input maps to the uniform vector.
  static ToyClassifier zeros(std::size_t classes, std::size_t dim = 16,
                             std::size_t buckets = 4096) {
    ToyConfig config;
    config.classes = classes;
    config.dim = dim;
    config.buckets = buckets;
    config.init_scale = 0.0;
    return ToyClassifier(config);
  }

  std::size_t class_count() const { return classes_; }
  std::size_t dim() const { return dim_; }
  std::size_t bucket_count() const { return buckets_; }

  std::vector<double>& embeddings() { return embeddings_; }
  std::vector<double>& query() { return query_; }
  std::vector<double>& output() { return output_; }
  const std::vector<double>& embeddings() const { return embeddings_; }
  const std::vector<double>& query() const { return query_; }
  const std::vector<double>& output() const { return output_; }

  std::size_t bucket(std::string_view lexeme) const {
    return static_cast<std::size_t>(fnv1a(lexeme) % buckets_);
  }

  std::vector<std::size_t> encode(const TokenStream& tokens) const {
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size());
    for (const Token& t : tokens) ids.push_back(bucket(t.lexeme));
    return ids;
  }

  Forward forward(std::span<const std::size_t> ids) const {
    Forward f;
    f.attention.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double* e = row(ids[i]);
      double s = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) s += query_[k] * e[k];
      f.attention[i] = s;
    }
    detail::softmax_in_place(f.attention);
    f.pooled.assign(dim_, 0.0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double* e = row(ids[i]);
      for (std::size_t k = 0; k < dim_; ++k) f.pooled[k] += f.attention[i] * e[k];
    }
    f.probabilities.assign(classes_, 0.0);
    for (std::size_t c = 0; c < classes_; ++c) {
      double z = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) {
        z += output_[c * dim_ + k] * f.pooled[k];
      }
      f.probabilities[c] = z;
    }
    detail::softmax_in_place(f.probabilities);
    return f;
  }

  double loss(std::span<const std::size_t> ids, std::size_t label) const {
    const Forward f = forward(ids);
    return -std::log(std::max(f.probabilities[label], 1e-300));
  }

  ToyGradient gradient(std::span<const std::size_t> ids,
                       std::size_t label) const {
    const Forward f = forward(ids);
    ToyGradient g;
    g.loss = -std::log(std::max(f.probabilities[label], 1e-300));

    std::vector<double> dz = f.probabilities;
    dz[label] -= 1.0;
    g.output.assign(classes_ * dim_, 0.0);
    std::vector<double> dh(dim_, 0.0);
    for (std::size_t c = 0; c < classes_; ++c) {
      for (std::size_t k = 0; k < dim_; ++k) {
        g.output[c * dim_ + k] = dz[c] * f.pooled[k];
        dh[k] += output_[c * dim_ + k] * dz[c];
      }
    }

    // Back through the attention softmax.
    std::vector<double> da(ids.size());
    double mean_da = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double* e = row(ids[i]);
      double v = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) v += dh[k] * e[k];
      da[i] = v;
      mean_da += f.attention[i] * v;
    }
    g.query.assign(dim_, 0.0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double ds = f.attention[i] * (da[i] - mean_da);
      const double* e = row(ids[i]);
      for (std::size_t k = 0; k < dim_; ++k) g.query[k] += ds * e[k];

      auto it = std::find_if(g.embeddings.begin(), g.embeddings.end(),
                             [&](const auto& p) { return p.first == ids[i]; });
      if (it == g.embeddings.end()) {
        g.embeddings.emplace_back(ids[i], std::vector<double>(dim_, 0.0));
        it = g.embeddings.end() - 1;
      }
      for (std::size_t k = 0; k < dim_; ++k) {
        it->second[k] += f.attention[i] * dh[k] + ds * query_[k];
      }
    }
    return g;
  }

  void apply(const ToyGradient& g, double learning_rate) {
    for (const auto& [b, grad] : g.embeddings) {
      double* e = &embeddings_[b * dim_];
      for (std::size_t k = 0; k < dim_; ++k) e[k] -= learning_rate * grad[k];
    }
    for (std::size_t k = 0; k < dim_; ++k) query_[k] -= learning_rate * g.query[k];
    for (std::size_t i = 0; i < output_.size(); ++i) {
      output_[i] -= learning_rate * g.output[i];
    }
  }

  Prediction classify(const CodeSnippet& snippet) const override {
    const auto ids = encode(snippet.tokens());
    return Prediction(forward(ids).probabilities);
  }

  bool supports_attention() const override { return true; }

  AttentionMap attention_weights(const CodeSnippet& snippet) const override {
    const auto ids = encode(snippet.tokens());
    return AttentionMap{{forward(ids).attention}};
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"classes", classes_},       {"dim", dim_},
                          {"buckets", buckets_},       {"embeddings", embeddings_},
                          {"query", query_},           {"output", output_}};
  }

  static ToyClassifier from_json(const nlohmann::json& j) {
    ToyClassifier model = zeros(j.at("classes").get<std::size_t>(),
                                j.at("dim").get<std::size_t>(),
                                j.at("buckets").get<std::size_t>());
    model.embeddings_ = j.at("embeddings").get<std::vector<double>>();
    model.query_ = j.at("query").get<std::vector<double>>();
    model.output_ = j.at("output").get<std::vector<double>>();
    if (model.embeddings_.size() != model.buckets_ * model.dim_ ||
        model.query_.size() != model.dim_ ||
        model.output_.size() != model.classes_ * model.dim_) {
      throw Error(ErrorKind::validation, "toy model parameter shapes mismatch");
    }
    return model;
  }

 private:
  const double* row(std::size_t b) const { return &embeddings_[b * dim_]; }

  std::size_t classes_;
  std::size_t dim_;
  std::size_t buckets_;
  std::vector<double> embeddings_;
  std::vector<double> query_;
  std::vector<double> output_;
};

struct ToyTrainReport {
  // Mean corpus loss before training, then after each epoch.
  std::vector<double> epoch_loss;
  double training_accuracy = 0.0;
};

inline double mean_loss(const ToyClassifier& model,
                        const std::vector<std::vector<std::size_t>>& encoded,
                        const std::vector<LabeledSnippet>& corpus) {
  double total = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    total += model.loss(encoded[i], corpus[i].label);
  }
  return total / static_cast<double>(corpus.size());
}

// Plain per-example gradient descent over a seeded shuffle.
inline ToyClassifier train_toy(const std::vector<LabeledSnippet>& corpus,
                               const ToyConfig& config,
                               ToyTrainReport* report = nullptr) {
  if (corpus.empty()) {
    throw Error(ErrorKind::validation, "training corpus is empty");
  }
  for (const LabeledSnippet& item : corpus) {
    if (item.label >= config.classes) {
      throw Error(ErrorKind::validation,
                  "label " + std::to_string(item.label) + " of '" + item.id +
                      "' outside [0, " + std::to_string(config.classes) + ")");
    }
  }
  ToyClassifier model(config);
  std::vector<std::vector<std::size_t>> encoded;
  encoded.reserve(corpus.size());
  for (const LabeledSnippet& item : corpus) {
    encoded.push_back(model.encode(item.code.tokens()));
  }
  ToyTrainReport local;
  local.epoch_loss.push_back(mean_loss(model, encoded, corpus));

  Rng rng(derive_seed(config.seed, "shuffle"));
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      model.apply(model.gradient(encoded[i], corpus[i].label),
                  config.learning_rate);
    }
    local.epoch_loss.push_back(mean_loss(model, encoded, corpus));
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    correct += model.classify(corpus[i].code).label() == corpus[i].label;
  }
  local.training_accuracy =
      static_cast<double>(correct) / static_cast<double>(corpus.size());
  if (report != nullptr) *report = std::move(local);
  return model;
}

}  // namespace codedenoise

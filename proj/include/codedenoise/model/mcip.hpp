#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "codedenoise/error.hpp"
#include "codedenoise/kernel/transform.hpp"
#include "codedenoise/model/backend.hpp"
#include "codedenoise/model/labeled_snippet.hpp"

namespace codedenoise {

struct McipConfig {
  std::size_t radius = 3;     // context tokens on each side of the mask
  double alpha = 1.0;         // additive smoothing toward the global prior
  bool cooccurrence = true;   // also condition on the rest of the snippet
};

// Masked identifier predictor over frequency tables, scored naive-Bayes
// style:
//   log P(n) + log P(context | n) + sum over other lexemes o of log P(o | n)
// The context is the k tokens on either side of the first masked occurrence
// with other identifiers abstracted to <id>. Every factor is smoothed toward
// the global name distribution, so an unseen context and no known
// neighbours reduce to the globally most frequent name.
class McipModel : public MaskFiller {
 public:
  explicit McipModel(McipConfig config = {}) : config_(config) {}

  const McipConfig& config() const { return config_; }
  bool empty() const { return global_.empty(); }
  std::size_t snippets_seen() const { return snippets_; }

  const std::map<std::string, std::map<std::string, std::uint64_t>>&
  conditional() const {
    return conditional_;
  }
  const std::map<std::string, std::uint64_t>& global() const { return global_; }

  // Context signature around token `position`. Tokens whose lexeme is in
  // `masked` render as <mask>, other renamable identifiers as <id>.
  static std::string signature(const CodeSnippet& snippet,
                               std::size_t position, std::string_view masked,
                               std::size_t radius) {
    const TokenStream& tokens = snippet.tokens();
    const IdentifierSet& ids = snippet.identifiers();
    std::string out;
    auto render = [&](std::ptrdiff_t i) {
      if (i < 0 || i >= static_cast<std::ptrdiff_t>(tokens.size())) {
        out += "<pad>";
      } else {
        const Token& t = tokens[static_cast<std::size_t>(i)];
        if (t.lexeme == masked) {
          out += "<mask>";
        } else if (t.kind == TokenKind::identifier && ids.contains(t.lexeme)) {
          out += "<id>";
        } else {
          out += t.lexeme;
        }
      }
      out += '\x1f';
    };
    const auto center = static_cast<std::ptrdiff_t>(position);
    const auto k = static_cast<std::ptrdiff_t>(radius);
    for (std::ptrdiff_t i = center - k; i < center; ++i) render(i);
    out += "|\x1f";
    for (std::ptrdiff_t i = center + 1; i <= center + k; ++i) render(i);
    return out;
  }

  // Distinct lexemes of the snippet other than `exclude`: the bag of
  // surrounding evidence a name is scored against.
  static std::set<std::string_view> features(const CodeSnippet& snippet,
                                             std::string_view exclude) {
    std::set<std::string_view> out;
    for (const Token& t : snippet.tokens()) {
      if (t.lexeme != exclude) out.insert(t.lexeme);
    }
    return out;
  }

  // Each identifier occurrence adds one context count; each identifier also
  // counts once against every other lexeme of its snippet.
  void observe(const CodeSnippet& snippet) {
    ++snippets_;
    for (const IdentifierEntry& entry : snippet.identifiers().entries()) {
      for (std::size_t position : entry.occurrences) {
        ++conditional_[signature(snippet, position, entry.name,
                                 config_.radius)][entry.name];
        ++global_[entry.name];
      }
      ++documents_[entry.name];
      if (config_.cooccurrence) {
        for (std::string_view f : features(snippet, entry.name)) {
          ++cooccurrence_[std::string(f)][entry.name];
        }
      }
    }
    global_total_ = 0;
    for (const auto& [name, n] : global_) global_total_ += n;
  }

  std::string mask_fill(const MaskedSnippet& masked) const override {
    if (global_.empty()) {
      throw Error(ErrorKind::no_candidate, "identifier model is empty");
    }
    const std::string sig = signature(masked.text, masked.first_position(),
                                      masked.sentinel, config_.radius);
    const std::map<std::string, std::uint64_t>* context = nullptr;
    if (auto it = conditional_.find(sig); it != conditional_.end()) {
      context = &it->second;
    }
    std::vector<const std::map<std::string, std::uint64_t>*> neighbours;
    if (config_.cooccurrence) {
      for (std::string_view f : features(masked.text, masked.sentinel)) {
        if (auto it = cooccurrence_.find(std::string(f)); it != cooccurrence_.end()) {
          neighbours.push_back(&it->second);
        }
      }
    }

    // Ties go to the lexicographically smallest name (map order).
    const std::string* best = nullptr;
    double best_score = 0.0;
    const double a = config_.alpha;
    for (const auto& [name, n] : global_) {
      const double prior = static_cast<double>(n) / static_cast<double>(global_total_);
      double score = std::log(prior);
      if (context != nullptr) {
        score += std::log((count(*context, name) + a * prior) /
                          (static_cast<double>(n) + a));
      }
      const double docs = static_cast<double>(documents_.at(name));
      for (const auto* row : neighbours) {
        score += std::log((count(*row, name) + a * prior) / (docs + a));
      }
      if (best == nullptr || score > best_score) {
        best = &name;
        best_score = score;
      }
    }
    return *best;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"radius", config_.radius},
                          {"alpha", config_.alpha},
                          {"cooccurrence", config_.cooccurrence},
                          {"snippets", snippets_},
                          {"conditional", conditional_},
                          {"global", global_},
                          {"documents", documents_},
                          {"pairs", cooccurrence_}};
  }

  static McipModel from_json(const nlohmann::json& j) {
    McipModel model(McipConfig{j.at("radius").get<std::size_t>(),
                               j.at("alpha").get<double>(),
                               j.at("cooccurrence").get<bool>()});
    using Table = std::map<std::string, std::map<std::string, std::uint64_t>>;
    using Counts = std::map<std::string, std::uint64_t>;
    model.snippets_ = j.at("snippets").get<std::size_t>();
    model.conditional_ = j.at("conditional").get<Table>();
    model.global_ = j.at("global").get<Counts>();
    model.documents_ = j.at("documents").get<Counts>();
    model.cooccurrence_ = j.at("pairs").get<Table>();
    for (const auto& [name, n] : model.global_) model.global_total_ += n;
    return model;
  }

 private:
  static double count(const std::map<std::string, std::uint64_t>& row,
                      const std::string& name) {
    auto it = row.find(name);
    return it == row.end() ? 0.0 : static_cast<double>(it->second);
  }

  McipConfig config_;
  std::size_t snippets_ = 0;
  std::uint64_t global_total_ = 0;
  // signature -> name -> occurrences in that context
  std::map<std::string, std::map<std::string, std::uint64_t>> conditional_;
  std::map<std::string, std::uint64_t> global_;     // name -> occurrences
  std::map<std::string, std::uint64_t> documents_;  // name -> snippets using it
  // lexeme -> name -> snippets containing both
  std::map<std::string, std::map<std::string, std::uint64_t>> cooccurrence_;
};

struct McipTrainReport {
  std::size_t retained = 0;
  std::size_t discarded = 0;
  bool empty_warning = false;
};

// Builds the clean-data model: only snippets the classifier labels correctly
// contribute.
inline McipModel train_mcip(const std::vector<LabeledSnippet>& corpus,
                            const ClassifierBackend& classifier,
                            McipConfig config = {},
                            McipTrainReport* report = nullptr) {
  McipModel model(config);
  McipTrainReport local;
  for (const LabeledSnippet& item : corpus) {
    if (classify(classifier, item.code).label() == item.label) {
      model.observe(item.code);
      ++local.retained;
    } else {
      ++local.discarded;
    }
  }
  local.empty_warning = model.empty();
  if (report != nullptr) *report = local;
  return model;
}

// Same model over the unfiltered corpus.
inline McipModel train_mip(const std::vector<LabeledSnippet>& corpus,
                           McipConfig config = {}) {
  McipModel model(config);
  for (const LabeledSnippet& item : corpus) model.observe(item.code);
  return model;
}

}  // namespace codedenoise

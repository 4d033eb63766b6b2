#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "codedenoise/error.hpp"
#include "codedenoise/kernel/code_snippet.hpp"
#include "codedenoise/model/backend.hpp"
#include "codedenoise/random.hpp"

namespace codedenoise {

// W_i: mean attention of token i over all layers.
struct TokenContribution {
  std::vector<double> scores;
};

struct RankedIdentifier {
  std::string name;
  double score = 0.0;
  std::size_t first_occurrence = 0;

  friend bool operator==(const RankedIdentifier&, const RankedIdentifier&) = default;
};

// Descending by score; equal scores keep source order.
using RankedNoiseList = std::vector<RankedIdentifier>;

inline TokenContribution token_contributions(const AttentionMap& map) {
  if (map.layers() == 0) {
    throw Error(ErrorKind::structure, "attention map has no layers");
  }
  const std::size_t m = map.tokens();
  TokenContribution out{std::vector<double>(m, 0.0)};
  for (const auto& layer : map.weights) {
    if (layer.size() != m) {
      throw Error(ErrorKind::structure, "attention layers differ in length");
    }
    for (std::size_t i = 0; i < m; ++i) out.scores[i] += layer[i];
  }
  const double n = static_cast<double>(map.layers());
  for (double& w : out.scores) w /= n;
  return out;
}

// Identifier score = max W_i over its occurrences. Output follows the
// identifier set's first-occurrence order.
inline std::vector<std::pair<std::string, double>> identifier_contributions(
    const TokenContribution& tc, const IdentifierSet& ids) {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(ids.size());
  for (const IdentifierEntry& entry : ids.entries()) {
    double best = 0.0;
    bool first = true;
    for (std::size_t i : entry.occurrences) {
      if (i >= tc.scores.size()) {
        throw Error(ErrorKind::structure, "occurrence index beyond attention map");
      }
      if (first || tc.scores[i] > best) best = tc.scores[i];
      first = false;
    }
    out.emplace_back(entry.name, best);
  }
  return out;
}

inline RankedNoiseList rank_by_contribution(const TokenContribution& tc,
                                            const IdentifierSet& ids) {
  const auto scores = identifier_contributions(tc, ids);
  RankedNoiseList ranked;
  ranked.reserve(scores.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    ranked.push_back(RankedIdentifier{scores[k].first, scores[k].second,
                                      ids.entries()[k].occurrences.front()});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedIdentifier& a, const RankedIdentifier& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.first_occurrence < b.first_occurrence;
                   });
  return ranked;
}

// Attention-based localization. Propagates the backend's capability error
// when it exposes no attention.
inline RankedNoiseList rank_noisy_identifiers(const CodeSnippet& snippet,
                                              const ClassifierBackend& backend) {
  const AttentionMap map = attention_weights(backend, snippet);
  if (snippet.identifiers().empty()) return {};
  return rank_by_contribution(token_contributions(map), snippet.identifiers());
}

inline RankedNoiseList random_ranking(const CodeSnippet& snippet, Rng& rng) {
  RankedNoiseList ranked;
  for (const IdentifierEntry& entry : snippet.identifiers().entries()) {
    ranked.push_back(RankedIdentifier{entry.name, 0.0, entry.occurrences.front()});
  }
  rng.shuffle(ranked);
  return ranked;
}

}  // namespace codedenoise

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "codedenoise/error.hpp"
#include "codedenoise/kernel/transform.hpp"
#include "codedenoise/kernel/vocabulary.hpp"
#include "codedenoise/model/backend.hpp"
#include "codedenoise/random.hpp"

namespace codedenoise {

struct SmoothingConfig {
  std::size_t theta = 1;             // max identifiers renamed per sample
  std::size_t multiplier = 1;        // N = multiplier * |S(x)| ...
  std::optional<std::size_t> fixed;  // ... unless a fixed N is given
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const {
    if (theta < 1) throw Error(ErrorKind::validation, "theta must be >= 1");
    if (multiplier < 1) {
      throw Error(ErrorKind::validation, "sample multiplier must be >= 1");
    }
    if (fixed && *fixed < 1) {
      throw Error(ErrorKind::validation, "sample count must be >= 1");
    }
  }

  std::size_t samples(std::size_t identifier_count) const {
    return fixed ? *fixed : multiplier * identifier_count;
  }
};

struct DetectionVerdict {
  bool flagged = false;
  Prediction original;
  std::vector<std::size_t> sample_labels;  // in perturbation-index order
  std::size_t majority = 0;
  std::string reason;                      // set when no samples were drawn
};

// Renames delta identifiers, delta uniform in [1, min(theta, |S(x)|)], each to
// a distinct name from V - S(x). Returns nullopt when the snippet has no
// identifiers or the pool is empty.
inline std::optional<CodeSnippet> sample_perturbation(
    const CodeSnippet& snippet, const Vocabulary& vocab, std::size_t theta,
    Rng& rng) {
  const IdentifierSet& ids = snippet.identifiers();
  if (ids.empty()) return std::nullopt;
  std::vector<std::string> pool = candidate_pool(vocab, ids);
  if (pool.empty()) return std::nullopt;

  // The pool bound only bites for tiny vocabularies.
  const std::size_t upper =
      std::min({std::max<std::size_t>(theta, 1), ids.size(), pool.size()});
  const std::size_t delta = rng.between(1, upper);

  std::vector<std::size_t> chosen(ids.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
  for (std::size_t i = 0; i < delta; ++i) {
    std::swap(chosen[i], chosen[i + rng.below(chosen.size() - i)]);
  }

  CodeSnippet current = snippet;
  for (std::size_t i = 0; i < delta; ++i) {
    const std::string& from = ids.entries()[chosen[i]].name;
    const std::size_t pick = rng.below(pool.size());
    const std::string to = pool[pick];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    current = rename_identifier(current, from, to);
  }
  return current;
}

// Label counts with ties that include `original` resolved to `original`;
// other ties go to the lowest label.
inline std::size_t majority_label(const std::vector<std::size_t>& labels,
                                  std::size_t original) {
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t l : labels) ++counts[l];
  std::size_t best = original;
  std::size_t best_count = counts.count(original) ? counts[original] : 0;
  for (const auto& [label, n] : counts) {
    if (n > best_count) {
      best = label;
      best_count = n;
    }
  }
  return best;
}

// Randomized-smoothing check: classify N renamed neighbours of x and flag x
// when their majority disagrees with M(x). Each sample draws from its own
// seeded stream, so the verdict does not depend on scheduling.
inline DetectionVerdict identify_mispredicted(const CodeSnippet& snippet,
                                              const ClassifierBackend& backend,
                                              const Vocabulary& vocab,
                                              const SmoothingConfig& config) {
  config.validate();
  DetectionVerdict verdict;
  verdict.original = classify(backend, snippet);
  verdict.majority = verdict.original.label();
  const IdentifierSet& ids = snippet.identifiers();
  if (ids.empty()) {
    verdict.reason = "no identifiers";
    return verdict;
  }
  if (candidate_pool(vocab, ids).empty()) {
    verdict.reason = "empty candidate pool";
    return verdict;
  }

  const std::size_t n = config.samples(ids.size());
  verdict.sample_labels.assign(n, 0);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      Rng rng(derive_seed(config.seed, k));
      auto perturbed = sample_perturbation(snippet, vocab, config.theta, rng);
      verdict.sample_labels[k] = classify(backend, *perturbed).label();
    }
  };
  const std::size_t workers =
      backend.concurrent_safe() ? std::min(config.workers, n) : 1;
  if (workers <= 1) {
    run(0, n);
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          run(w * chunk, std::min(n, (w + 1) * chunk));
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  verdict.majority = majority_label(verdict.sample_labels, verdict.original.label());
  verdict.flagged = verdict.majority != verdict.original.label();
  return verdict;
}

}  // namespace codedenoise

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "codedenoise/error.hpp"
#include "codedenoise/kernel/transform.hpp"
#include "codedenoise/kernel/vocabulary.hpp"
#include "codedenoise/localizer/localizer.hpp"
#include "codedenoise/model/backend.hpp"
#include "codedenoise/random.hpp"

namespace codedenoise {

enum class CleanseStrategy { mcip, mip, random };

inline std::string_view to_string(CleanseStrategy s) {
  switch (s) {
    case CleanseStrategy::mcip: return "mcip";
    case CleanseStrategy::mip: return "mip";
    case CleanseStrategy::random: return "random";
  }
  return "?";
}

inline CleanseStrategy parse_cleanse_strategy(std::string_view text) {
  if (text == "mcip") return CleanseStrategy::mcip;
  if (text == "mip") return CleanseStrategy::mip;
  if (text == "random") return CleanseStrategy::random;
  throw Error(ErrorKind::validation,
              "unknown cleanse strategy '" + std::string(text) + "'");
}

struct CleanseConfig {
  CleanseStrategy strategy = CleanseStrategy::mcip;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_iterations;  // default: whole ranking
};

// Replacement sources. Only the one the strategy needs must be set.
struct CleanseModels {
  const MaskFiller* mcip = nullptr;
  const MaskFiller* mip = nullptr;
  const Vocabulary* vocabulary = nullptr;
};

enum class StepAction {
  flipped,
  kept_lower_confidence,
  discarded_collision,
  discarded_no_gain,
  no_candidate,
};

inline std::string_view to_string(StepAction a) {
  switch (a) {
    case StepAction::flipped: return "flipped";
    case StepAction::kept_lower_confidence: return "kept-lower-confidence";
    case StepAction::discarded_collision: return "discarded-collision";
    case StepAction::discarded_no_gain: return "discarded-no-gain";
    case StepAction::no_candidate: return "no-candidate";
  }
  return "?";
}

struct CleanseStep {
  std::string identifier;
  std::string proposal;  // empty for no-candidate
  StepAction action = StepAction::no_candidate;
  double confidence_before = 0.0;
  // Original-label probability of the renamed snippet; absent when no
  // rename was classified.
  std::optional<double> confidence_after;

  friend bool operator==(const CleanseStep&, const CleanseStep&) = default;
};

struct DenoiseOutcome {
  std::size_t original_label = 0;
  std::size_t final_label = 0;
  CodeSnippet denoised;
  std::vector<CleanseStep> trace;
  std::size_t changed_identifiers = 0;
  double elapsed_seconds = 0.0;
};

// Transport failure mid-loop. Carries the trace gathered so far.
class CleanseAborted : public Error {
 public:
  CleanseAborted(const Error& cause, DenoiseOutcome partial)
      : Error(cause.kind(), cause.what()), partial_(std::move(partial)) {}
  const DenoiseOutcome& partial() const { return partial_; }

 private:
  DenoiseOutcome partial_;
};

inline std::string propose_replacement(const MaskedSnippet& masked,
                                       const CleanseConfig& config,
                                       const CleanseModels& models, Rng& rng) {
  switch (config.strategy) {
    case CleanseStrategy::mcip:
    case CleanseStrategy::mip: {
      const MaskFiller* model =
          config.strategy == CleanseStrategy::mcip ? models.mcip : models.mip;
      if (model == nullptr) {
        throw Error(ErrorKind::capability,
                    "no model for strategy " + std::string(to_string(config.strategy)));
      }
      return mask_fill(*model, masked);
    }
    case CleanseStrategy::random: {
      if (models.vocabulary == nullptr) {
        throw Error(ErrorKind::capability, "random strategy needs a vocabulary");
      }
      const auto& names = models.vocabulary->names();
      if (names.empty()) throw Error(ErrorKind::no_candidate, "empty vocabulary");
      return names[rng.below(names.size())];
    }
  }
  throw Error(ErrorKind::validation, "unknown cleanse strategy");
}

// Greedy cleansing: walk the ranking once, keep renames that lower the
// original label's probability, stop at the first label flip.
inline DenoiseOutcome cleanse(const CodeSnippet& snippet,
                              const Prediction& original,
                              const RankedNoiseList& ranked,
                              const ClassifierBackend& backend,
                              const CleanseConfig& config,
                              const CleanseModels& models) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t c = original.label();
  DenoiseOutcome out{c, c, snippet, {}, 0, 0.0};
  auto finish = [&]() -> DenoiseOutcome& {
    out.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  };

  Rng rng(config.seed);
  double prob = original.probability(c);
  const std::size_t limit = config.max_iterations
                                ? std::min(*config.max_iterations, ranked.size())
                                : ranked.size();
  try {
    for (std::size_t k = 0; k < limit; ++k) {
      const std::string& iden = ranked[k].name;
      CleanseStep step{iden, "", StepAction::no_candidate, prob, std::nullopt};
      const MaskedSnippet masked = mask_identifier(out.denoised, iden);
      try {
        step.proposal = propose_replacement(masked, config, models, rng);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::no_candidate) throw;
        out.trace.push_back(std::move(step));
        continue;
      }
      if (out.denoised.identifiers().taken(step.proposal)) {
        step.action = StepAction::discarded_collision;
        out.trace.push_back(std::move(step));
        continue;
      }
      const CodeSnippet candidate =
          rename_identifier(out.denoised, iden, step.proposal);
      const Prediction after = classify(backend, candidate);
      step.confidence_after = after.probability(c);
      if (after.label() != c) {
        step.action = StepAction::flipped;
        out.trace.push_back(std::move(step));
        out.final_label = after.label();
        out.denoised = candidate;
        ++out.changed_identifiers;
        return finish();
      }
      if (*step.confidence_after < prob) {
        step.action = StepAction::kept_lower_confidence;
        prob = *step.confidence_after;
        out.denoised = candidate;
        ++out.changed_identifiers;
      } else {
        step.action = StepAction::discarded_no_gain;
      }
      out.trace.push_back(std::move(step));
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::transport && e.kind() != ErrorKind::protocol) throw;
    throw CleanseAborted(e, finish());
  }
  return finish();
}

}  // namespace codedenoise

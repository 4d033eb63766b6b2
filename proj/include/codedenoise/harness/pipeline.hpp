#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "codedenoise/cleanser/cleanser.hpp"
#include "codedenoise/detector/deepgini.hpp"
#include "codedenoise/detector/smoothing.hpp"
#include "codedenoise/harness/config.hpp"
#include "codedenoise/harness/corpus.hpp"
#include "codedenoise/harness/metrics.hpp"
#include "codedenoise/localizer/localizer.hpp"

namespace codedenoise {

// Everything denoising reads. The pipeline never writes through these.
struct PipelineModels {
  const ClassifierBackend* classifier = nullptr;
  const MaskFiller* mcip = nullptr;
  const MaskFiller* mip = nullptr;
  const Vocabulary* vocabulary = nullptr;
};

struct InputResult {
  std::size_t final_label = 0;
  Prediction original;
  bool flagged = false;
  std::string reason;  // pass-through reason when not flagged
  bool localization_fallback = false;
  std::optional<DenoiseOutcome> outcome;
  double elapsed_seconds = 0.0;
};

// Detect, and only when flagged, localize and cleanse. `seed` fixes every
// random choice made for this input.
inline InputResult denoise_input(const CodeSnippet& snippet,
                                 const PipelineConfig& config,
                                 const PipelineModels& models, std::uint64_t seed) {
  if (models.classifier == nullptr) {
    throw Error(ErrorKind::capability, "pipeline has no classifier");
  }
  const auto start = std::chrono::steady_clock::now();
  const ClassifierBackend& backend = *models.classifier;
  InputResult result;

  switch (config.detector) {
    case DetectorKind::smoothing: {
      if (models.vocabulary == nullptr) {
        throw Error(ErrorKind::capability, "smoothing detector needs a vocabulary");
      }
      SmoothingConfig sc = config.smoothing;
      sc.seed = derive_seed(seed, "detect");
      sc.workers = config.workers;
      DetectionVerdict v = identify_mispredicted(snippet, backend, *models.vocabulary, sc);
      result.original = std::move(v.original);
      result.flagged = v.flagged;
      result.reason = v.flagged ? "" : (v.reason.empty() ? "majority agrees" : v.reason);
      break;
    }
    case DetectorKind::deepgini: {
      result.original = classify(backend, snippet);
      result.flagged = config.gini.flags(deepgini_uncertainty(result.original));
      if (!result.flagged) result.reason = "uncertainty below threshold";
      break;
    }
    case DetectorKind::none:
      result.original = classify(backend, snippet);
      result.reason = "detection disabled";
      break;
  }
  result.final_label = result.original.label();

  if (result.flagged) {
    RankedNoiseList ranked;
    Rng local_rng(derive_seed(seed, "localize"));
    if (config.localizer == LocalizerKind::attention && backend.supports_attention()) {
      ranked = rank_noisy_identifiers(snippet, backend);
    } else {
      result.localization_fallback = config.localizer == LocalizerKind::attention;
      ranked = random_ranking(snippet, local_rng);
    }
    CleanseConfig cc = config.cleanse;
    cc.seed = derive_seed(seed, "cleanse");
    result.outcome = cleanse(snippet, result.original, ranked, backend, cc,
                             CleanseModels{models.mcip, models.mip, models.vocabulary});
    result.final_label = result.outcome->final_label;
  }
  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

inline std::uint64_t repetition_seed(std::uint64_t global, std::size_t repetition) {
  return derive_seed(global, static_cast<std::uint64_t>(repetition));
}

inline OutcomeRecord to_record(const LabeledSnippet& item, std::size_t repetition,
                               const InputResult& r) {
  OutcomeRecord rec;
  rec.id = item.id;
  rec.repetition = repetition;
  rec.label = item.label;
  rec.original_label = r.original.label();
  rec.final_label = r.final_label;
  rec.flagged = r.flagged;
  rec.reason = r.reason;
  rec.localization_fallback = r.localization_fallback;
  rec.elapsed_seconds = r.elapsed_seconds;
  if (r.outcome) {
    rec.trace = r.outcome->trace;
    rec.changed_identifiers = r.outcome->changed_identifiers;
    if (r.outcome->changed_identifiers > 0) rec.denoised = r.outcome->denoised.source();
  }
  return rec;
}

// Runs every test input `repetitions` times. Per-input failures are
// recorded and the run continues. Records come back ordered by
// (repetition, corpus position) whatever the worker count.
inline MetricsReport evaluate(const Corpus& test, const PipelineConfig& config,
                              const PipelineModels& models) {
  config.validate();
  MetricsReport report;
  const std::size_t n = test.records.size();
  const bool parallel = config.workers > 1 && models.classifier != nullptr &&
                        models.classifier->concurrent_safe() &&
                        (models.mcip == nullptr || models.mcip->concurrent_safe()) &&
                        (models.mip == nullptr || models.mip->concurrent_safe());
  PipelineConfig inner = config;
  if (parallel) inner.workers = 1;  // parallelism across inputs, not samples

  for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t rep_seed = repetition_seed(config.seed, rep);
    std::vector<OutcomeRecord> records(n);
    auto run_one = [&](std::size_t i) {
      const LabeledSnippet& item = test.records[i];
      try {
        records[i] = to_record(item, rep,
                               denoise_input(item.code, inner, models,
                                             derive_seed(rep_seed, item.id)));
      } catch (const std::exception& e) {
        OutcomeRecord failed;
        failed.id = item.id;
        failed.repetition = rep;
        failed.label = item.label;
        failed.error = e.what();
        records[i] = std::move(failed);
      }
    };
    if (!parallel || n < 2) {
      for (std::size_t i = 0; i < n; ++i) run_one(i);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < std::min(config.workers, n); ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < n; i = next++) run_one(i);
        });
      }
      for (auto& t : pool) t.join();
    }
    report.repetitions.push_back(compute_metrics(records));
    for (auto& r : records) report.outcomes.push_back(std::move(r));
  }
  summarize(report);
  return report;
}

}  // namespace codedenoise

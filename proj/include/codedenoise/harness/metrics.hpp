#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "codedenoise/cleanser/cleanser.hpp"

namespace codedenoise {

// One input under one repetition.
struct OutcomeRecord {
  std::string id;
  std::size_t repetition = 0;
  std::size_t label = 0;           // ground truth
  std::size_t original_label = 0;  // M(x)
  std::size_t final_label = 0;     // after denoising
  bool flagged = false;
  std::string reason;              // why an input passed through untouched
  bool localization_fallback = false;
  std::vector<CleanseStep> trace;
  std::size_t changed_identifiers = 0;
  std::string denoised;            // only when the code changed
  std::string error;               // non-empty when the input failed
  double elapsed_seconds = 0.0;

  bool failed() const { return !error.empty(); }
};

struct RepetitionMetrics {
  std::size_t total = 0;
  std::size_t failures = 0;
  std::size_t mispredicted = 0;
  std::size_t corrected = 0;
  std::size_t correct = 0;
  std::size_t broken = 0;
  std::size_t flagged = 0;
  std::optional<double> csr;  // absent when nothing was mispredicted
  std::optional<double> mcr;  // absent when nothing was correct
  double accuracy_before = 0.0;
  double accuracy_after = 0.0;
  double mean_denoise_seconds = 0.0;
  double mean_changed_identifiers = 0.0;  // over flagged inputs
};

struct MetricsReport {
  std::vector<RepetitionMetrics> repetitions;
  std::optional<double> csr;
  std::optional<double> mcr;
  double accuracy_before = 0.0;
  double accuracy_after = 0.0;
  double mean_denoise_seconds = 0.0;
  double mean_changed_identifiers = 0.0;
  std::vector<OutcomeRecord> outcomes;
};

// Failed inputs are counted but excluded from every rate.
inline RepetitionMetrics compute_metrics(const std::vector<OutcomeRecord>& records) {
  RepetitionMetrics m;
  std::size_t right_after = 0, changed = 0;
  double seconds = 0.0;
  for (const auto& r : records) {
    if (r.failed()) {
      ++m.failures;
      continue;
    }
    ++m.total;
    seconds += r.elapsed_seconds;
    if (r.original_label == r.label) {
      ++m.correct;
      if (r.final_label != r.label) ++m.broken;
    } else {
      ++m.mispredicted;
      if (r.final_label == r.label) ++m.corrected;
    }
    right_after += r.final_label == r.label;
    if (r.flagged) {
      ++m.flagged;
      changed += r.changed_identifiers;
    }
  }
  if (m.mispredicted > 0) {
    m.csr = static_cast<double>(m.corrected) / static_cast<double>(m.mispredicted);
  }
  if (m.correct > 0) {
    m.mcr = static_cast<double>(m.broken) / static_cast<double>(m.correct);
  }
  if (m.total > 0) {
    const auto n = static_cast<double>(m.total);
    m.accuracy_before = static_cast<double>(m.correct) / n;
    m.accuracy_after = static_cast<double>(right_after) / n;
    m.mean_denoise_seconds = seconds / n;
  }
  if (m.flagged > 0) {
    m.mean_changed_identifiers =
        static_cast<double>(changed) / static_cast<double>(m.flagged);
  }
  return m;
}

// Means over repetitions; rates average only where defined.
inline void summarize(MetricsReport& report) {
  const auto& reps = report.repetitions;
  if (reps.empty()) return;
  double csr = 0.0, mcr = 0.0;
  std::size_t csr_n = 0, mcr_n = 0;
  report.accuracy_before = report.accuracy_after = 0.0;
  report.mean_denoise_seconds = report.mean_changed_identifiers = 0.0;
  for (const auto& r : reps) {
    if (r.csr) csr += *r.csr, ++csr_n;
    if (r.mcr) mcr += *r.mcr, ++mcr_n;
    report.accuracy_before += r.accuracy_before;
    report.accuracy_after += r.accuracy_after;
    report.mean_denoise_seconds += r.mean_denoise_seconds;
    report.mean_changed_identifiers += r.mean_changed_identifiers;
  }
  const auto n = static_cast<double>(reps.size());
  report.csr = csr_n ? std::optional<double>(csr / static_cast<double>(csr_n)) : std::nullopt;
  report.mcr = mcr_n ? std::optional<double>(mcr / static_cast<double>(mcr_n)) : std::nullopt;
  report.accuracy_before /= n;
  report.accuracy_after /= n;
  report.mean_denoise_seconds /= n;
  report.mean_changed_identifiers /= n;
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const CleanseStep& s) {
  return nlohmann::json{{"identifier", s.identifier},
                        {"proposal", s.proposal},
                        {"action", to_string(s.action)},
                        {"confidence_before", s.confidence_before},
                        {"confidence_after", optional_json(s.confidence_after)}};
}

// Timing is left out so that reruns produce identical bytes.
inline nlohmann::json to_json(const OutcomeRecord& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& s : r.trace) trace.push_back(to_json(s));
  nlohmann::json j{{"id", r.id},
                   {"repetition", r.repetition},
                   {"label", r.label},
                   {"original_label", r.original_label},
                   {"final_label", r.final_label},
                   {"flagged", r.flagged},
                   {"changed_identifiers", r.changed_identifiers},
                   {"trace", std::move(trace)}};
  if (!r.reason.empty()) j["reason"] = r.reason;
  if (r.localization_fallback) j["localization_fallback"] = true;
  if (!r.denoised.empty()) j["denoised"] = r.denoised;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline nlohmann::json to_json(const RepetitionMetrics& m) {
  return nlohmann::json{{"total", m.total},
                        {"failures", m.failures},
                        {"mispredicted", m.mispredicted},
                        {"corrected", m.corrected},
                        {"correct", m.correct},
                        {"broken", m.broken},
                        {"flagged", m.flagged},
                        {"csr", optional_json(m.csr)},
                        {"mcr", optional_json(m.mcr)},
                        {"accuracy_before", m.accuracy_before},
                        {"accuracy_after", m.accuracy_after},
                        {"mean_denoise_seconds", m.mean_denoise_seconds},
                        {"mean_changed_identifiers", m.mean_changed_identifiers}};
}

inline nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& r : report.repetitions) reps.push_back(to_json(r));
  return nlohmann::json{{"csr", optional_json(report.csr)},
                        {"mcr", optional_json(report.mcr)},
                        {"accuracy_before", report.accuracy_before},
                        {"accuracy_after", report.accuracy_after},
                        {"mean_denoise_seconds", report.mean_denoise_seconds},
                        {"mean_changed_identifiers", report.mean_changed_identifiers},
                        {"repetitions", std::move(reps)}};
}

}  // namespace codedenoise

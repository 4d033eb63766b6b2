#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include "codedenoise/error.hpp"
#include "codedenoise/model/backend.hpp"

namespace codedenoise {

// 1 - sum_c p(c)^2. Zero for one-hot vectors, 1 - 1/C at the uniform vector.
inline double deepgini_uncertainty(const Prediction& prediction) {
  double sum = 0.0;
  for (double p : prediction.probabilities()) sum += p * p;
  return std::max(0.0, 1.0 - sum);
}

struct GiniConfig {
  double zeta = 0.5;

  void validate() const {
    if (!(zeta >= 0.0 && zeta < 1.0)) {
      throw Error(ErrorKind::validation, "zeta must lie in [0, 1)");
    }
  }

  // An input is flagged when its uncertainty reaches the threshold.
  bool flags(double score) const { return score >= zeta; }
};

struct ZetaCalibration {
  GiniConfig config;
  double true_positive_rate = 0.0;
  double false_positive_rate = 0.0;
  bool warning = false;  // no threshold met the false-positive bound
};

inline constexpr double max_false_positive_rate = 0.05;

// Picks zeta from the observed scores: best true-positive rate with false
// positive rate <= 5%, smallest threshold among ties. Items are
// (score, mispredicted).
inline ZetaCalibration calibrate_zeta(
    const std::vector<std::pair<double, bool>>& items) {
  std::size_t positives = 0, negatives = 0;
  for (const auto& [score, positive] : items) {
    (positive ? positives : negatives)++;
  }
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorKind::validation,
                "calibration needs positive and negative examples");
  }
  std::vector<std::pair<double, bool>> sorted = items;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Sweep thresholds ascending; at threshold t the flagged set is every item
  // with score >= t, i.e. the suffix starting at t's first occurrence.
  ZetaCalibration best;
  ZetaCalibration fallback;
  bool have_best = false, have_fallback = false;
  std::size_t tp = positives, fp = negatives;
  for (std::size_t i = 0; i < sorted.size();) {
    const double threshold = sorted[i].first;
    const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
    const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
    if (fpr <= max_false_positive_rate) {
      if (!have_best || tpr > best.true_positive_rate) {
        best = ZetaCalibration{GiniConfig{threshold}, tpr, fpr, false};
        have_best = true;
      }
    }
    if (!have_fallback || fpr < fallback.false_positive_rate) {
      fallback = ZetaCalibration{GiniConfig{threshold}, tpr, fpr, true};
      have_fallback = true;
    }
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].first == threshold) {
      (sorted[j].second ? tp : fp)--;
      ++j;
    }
    i = j;
  }
  return have_best ? best : fallback;
}

}  // namespace codedenoise

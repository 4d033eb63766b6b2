#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "codedenoise/error.hpp"
#include "codedenoise/harness/corpus.hpp"
#include "codedenoise/kernel/transform.hpp"
#include "codedenoise/random.hpp"

namespace codedenoise {

// Per-class lists of names strongly associated with that class.
struct MarkerPools {
  std::vector<std::vector<std::string>> by_class;

  std::size_t classes() const { return by_class.size(); }
};

// A name is a marker of class c when at least `purity` of the snippets
// using it belong to c and it appears in at least `min_snippets` of them.
inline MarkerPools class_marker_pools(const Corpus& train, std::size_t classes,
                                      double purity = 0.9,
                                      std::size_t min_snippets = 3) {
  std::map<std::string, std::vector<std::size_t>> counts;
  for (const auto& r : train.records) {
    for (const auto& e : r.code.identifiers().entries()) {
      auto& row = counts[e.name];
      row.resize(classes, 0);
      if (r.label < classes) ++row[r.label];
    }
  }
  MarkerPools pools{std::vector<std::vector<std::string>>(classes)};
  for (const auto& [name, row] : counts) {
    std::size_t total = 0, best = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      total += row[c];
      if (row[c] > row[best]) best = c;
    }
    if (total >= min_snippets &&
        static_cast<double>(row[best]) >= purity * static_cast<double>(total)) {
      pools.by_class[best].push_back(name);
    }
  }
  return pools;
}

struct InjectionEntry {
  std::string id;
  std::string original_name;
  std::string injected_name;
  std::size_t target_class = 0;
};

struct Injection {
  Corpus corpus;
  std::vector<InjectionEntry> manifest;
  std::size_t skipped = 0;  // chosen records that could not be renamed
};

// Renames one random identifier in round(rate * eligible) records to a
// marker of a randomly chosen wrong class. Records without identifiers are
// never chosen and are counted as skipped.
inline Injection inject_noise(const Corpus& clean, const MarkerPools& pools,
                              double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw Error(ErrorKind::validation, "noise rate must lie in [0, 1]");
  }
  Injection out{clean, {}, 0};
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < clean.records.size(); ++i) {
    if (clean.records[i].code.identifiers().empty()) {
      ++out.skipped;
    } else {
      eligible.push_back(i);
    }
  }
  const auto k = static_cast<std::size_t>(
      std::llround(rate * static_cast<double>(eligible.size())));
  rng.shuffle(eligible);
  eligible.resize(k);
  std::sort(eligible.begin(), eligible.end());

  for (std::size_t i : eligible) {
    LabeledSnippet& record = out.corpus.records[i];
    const IdentifierSet& ids = record.code.identifiers();
    const std::string from = ids.entries()[rng.below(ids.size())].name;
    std::vector<std::size_t> targets;
    for (std::size_t c = 0; c < pools.classes(); ++c) {
      if (c == record.label) continue;
      for (const auto& name : pools.by_class[c]) {
        if (!ids.taken(name)) {
          targets.push_back(c);
          break;
        }
      }
    }
    if (targets.empty()) {
      ++out.skipped;
      continue;
    }
    const std::size_t target = targets[rng.below(targets.size())];
    std::vector<std::string> names;
    for (const auto& name : pools.by_class[target]) {
      if (!ids.taken(name)) names.push_back(name);
    }
    const std::string to = names[rng.below(names.size())];
    record.code = rename_identifier(record.code, from, to);
    out.manifest.push_back(InjectionEntry{record.id, from, to, target});
  }
  return out;
}

inline nlohmann::json to_json(const InjectionEntry& e) {
  return nlohmann::json{{"id", e.id},
                        {"original", e.original_name},
                        {"injected", e.injected_name},
                        {"target_class", e.target_class}};
}

}  // namespace codedenoise

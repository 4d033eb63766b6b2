// Acceptance run: one PASS/FAIL line per criterion. Each check compares the
// library against an independent oracle written here. Exits 0 once every
// criterion has been evaluated; pass --strict to exit 1 on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "codedenoise/cleanser/cleanser.hpp"
#include "codedenoise/detector/deepgini.hpp"
#include "codedenoise/detector/smoothing.hpp"
#include "codedenoise/harness/metrics.hpp"
#include "codedenoise/harness/noise.hpp"
#include "codedenoise/harness/pipeline.hpp"
#include "codedenoise/harness/synthetic.hpp"
#include "codedenoise/localizer/localizer.hpp"
#include "codedenoise/model/mcip.hpp"
#include "codedenoise/model/protocol.hpp"
#include "codedenoise/model/scripted_backend.hpp"
#include "codedenoise/model/toy_classifier.hpp"
#include "fixtures.hpp"

using namespace codedenoise;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      detail = why;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

Corpus synthetic(std::size_t per_class, std::uint64_t seed) {
  SyntheticConfig config;
  config.per_class = per_class;
  config.seed = seed;
  return generate_synthetic(config, "test", "a");
}

std::size_t count_identifier_tokens(const CodeSnippet& s, std::string_view name) {
  std::size_t n = 0;
  for (const Token& t : s.tokens()) n += t.kind == TokenKind::identifier && t.lexeme == name;
  return n;
}

// Names in first-occurrence order: a rename keeps token positions, so slot k
// always refers to the same identifier.
std::vector<std::string> slot_names(const CodeSnippet& s) {
  std::vector<std::pair<std::size_t, std::string>> slots;
  for (const auto& e : s.identifiers().entries()) slots.emplace_back(e.occurrences.front(), e.name);
  std::sort(slots.begin(), slots.end());
  std::vector<std::string> out;
  for (auto& [pos, name] : slots) out.push_back(name);
  return out;
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += n + ",";
  return out;
}

// ---------------------------------------------------------------------------

Result rename_safety() {
  Result r;
  const auto start = Clock::now();
  std::vector<CodeSnippet> corpus;
  for (const auto& src : fixtures::python_samples()) corpus.push_back(CodeSnippet::parse(src));
  for (auto& rec : synthetic(25, 41).records) corpus.push_back(rec.code);
  const Grammar& grammar = grammar_for(Language::python);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCXYZ_0123456789";

  Rng rng(2024);
  std::size_t renames = 0, snippets = 0;
  for (const CodeSnippet& x : corpus) {
    if (x.identifiers().empty()) continue;
    ++snippets;
    for (int trial = 0; trial < 12; ++trial) {
      const auto& entries = x.identifiers().entries();
      const IdentifierEntry& old = entries[rng.below(entries.size())];
      std::string fresh;
      do {
        fresh.assign(1 + rng.below(6), 'a');
        for (char& ch : fresh) ch = alphabet[rng.below(alphabet.size())];
      } while (!grammar.is_legal_identifier(fresh) || x.identifiers().taken(fresh) ||
               count_identifier_tokens(x, fresh) != 0);
      const CodeSnippet y = rename_identifier(x, old.name, fresh);
      const CodeSnippet reparsed = CodeSnippet::parse(y.source());
      r.require(reparsed.digest() == x.digest(), "digest changed: " + old.name + " -> " + fresh);
      r.require(count_identifier_tokens(reparsed, fresh) == old.occurrences.size(),
                "occurrence count not conserved for " + fresh);
      r.require(count_identifier_tokens(reparsed, old.name) ==
                    count_identifier_tokens(x, old.name) - old.occurrences.size(),
                "old name left behind: " + old.name);
      r.require(reparsed.identifiers().size() == x.identifiers().size(), "|S| changed");
      ++renames;
    }
  }
  const double elapsed = seconds_since(start);
  r.require(snippets >= 100 && renames >= 1000, "corpus too small");
  r.require(elapsed < 10.0, "took " + fmt(elapsed, 2) + " s");
  if (r.pass) {
    r.detail = std::to_string(renames) + " renames over " + std::to_string(snippets) +
               " snippets in " + fmt(elapsed, 2) + " s";
  }
  return r;
}

// ---------------------------------------------------------------------------

Result detector_oracle() {
  Result r;
  const auto start = Clock::now();
  std::vector<CodeSnippet> snippets;
  for (auto& rec : synthetic(5, 77).records) snippets.push_back(rec.code);
  for (const auto& src : fixtures::python_samples()) {
    const CodeSnippet s = CodeSnippet::parse(src);
    snippets.push_back(s);
  }

  std::size_t classes = 2;
  std::uint64_t salt = 0;
  auto label_of = [&](const CodeSnippet& s) {
    return static_cast<std::size_t>(fnv1a(join(slot_names(s)), salt) % classes);
  };
  std::mutex log_mutex;
  std::vector<CodeSnippet> log;
  const ScriptedBackend backend([&](const CodeSnippet& s) {
    std::lock_guard lock(log_mutex);
    log.push_back(s);
    std::vector<double> p(classes, 0.4 / static_cast<double>(classes - 1));
    p[label_of(s)] = 0.6;
    return p;
  });

  Rng rng(5150);
  std::size_t ties = 0, flagged = 0, calls = 0;
  for (int call = 0; call < 1000; ++call) {
    const CodeSnippet& x = snippets[rng.below(snippets.size())];
    classes = 2 + rng.below(2);
    salt = rng.next();
    std::vector<std::string> vocab_names;
    const std::size_t vocab_size = 1 + rng.below(12);
    for (std::size_t i = 0; i < vocab_size; ++i) vocab_names.push_back("v" + std::to_string(rng.below(20)));
    for (const auto& e : x.identifiers().entries()) {
      if (rng.below(3) == 0) vocab_names.push_back(e.name);
    }
    const Vocabulary vocab(vocab_names, "acceptance");
    SmoothingConfig config;
    config.theta = 1 + rng.below(3);
    config.multiplier = 1 + rng.below(2);
    config.seed = rng.next();

    log.clear();
    const DetectionVerdict v = identify_mispredicted(x, backend, vocab, config);
    ++calls;

    // Independent replay from what the backend actually saw.
    const std::size_t c = label_of(x);
    const std::vector<std::string> base = slot_names(x);
    std::set<std::string> pool;
    for (const auto& n : vocab.names()) {
      if (!x.identifiers().taken(n)) pool.insert(n);
    }
    const bool can_sample = !base.empty() && !pool.empty();
    const std::size_t n = can_sample ? config.multiplier * base.size() : 0;
    r.require(log.size() == 1 + n, "unexpected number of classify calls");
    if (log.empty() || log[0].source() != x.source()) {
      r.require(false, "first call is not the original input");
      continue;
    }
    std::vector<std::size_t> labels;
    for (std::size_t k = 1; k < log.size(); ++k) {
      const CodeSnippet& s = log[k];
      r.require(s.digest() == x.digest(), "perturbation changed structure");
      const std::vector<std::string> now = slot_names(s);
      std::size_t delta = 0;
      std::set<std::string> used;
      for (std::size_t i = 0; i < base.size() && i < now.size(); ++i) {
        if (now[i] == base[i]) continue;
        ++delta;
        r.require(pool.count(now[i]) == 1, "replacement outside V - S(x)");
        r.require(used.insert(now[i]).second, "replacement reused");
      }
      const std::size_t upper = std::min({config.theta, base.size(), pool.size()});
      r.require(delta >= 1 && delta <= upper, "delta out of range");
      labels.push_back(label_of(s));
    }
    std::vector<std::size_t> counts(classes, 0);
    for (std::size_t l : labels) ++counts[l];
    std::size_t majority = c;
    if (!labels.empty()) {
      const std::size_t top = *std::max_element(counts.begin(), counts.end());
      std::size_t winners = 0;
      for (std::size_t l = 0; l < classes; ++l) winners += counts[l] == top;
      if (winners > 1) ++ties;
      if (counts[c] != top) {
        majority = static_cast<std::size_t>(
            std::find(counts.begin(), counts.end(), top) - counts.begin());
      }
    }
    r.require(v.original.label() == c, "original label differs");
    r.require(v.sample_labels == labels, "sample labels differ from replay");
    r.require(v.majority == majority, "majority differs from brute-force tally");
    r.require(v.flagged == (majority != c), "flag differs from brute-force tally");
    flagged += v.flagged;

    if (call % 50 == 0) {
      SmoothingConfig parallel = config;
      parallel.workers = 3;
      const DetectionVerdict w = identify_mispredicted(x, backend, vocab, parallel);
      r.require(w.sample_labels == v.sample_labels && w.flagged == v.flagged,
                "worker count changed the verdict");
    }
  }
  const double elapsed = seconds_since(start);
  r.require(ties >= 20, "only " + std::to_string(ties) + " tie cases");
  r.require(elapsed < 30.0, "took " + fmt(elapsed, 2) + " s");
  if (r.pass) {
    r.detail = std::to_string(calls) + " calls, " + std::to_string(ties) + " ties, " +
               std::to_string(flagged) + " flagged, " + fmt(elapsed, 2) + " s";
  }
  return r;
}

// ---------------------------------------------------------------------------

Result attention_aggregation() {
  Result r;
  // One layer: W_i is the toy model's own attention vector.
  const ToyClassifier toy{ToyConfig{}};
  const CodeSnippet motivating = CodeSnippet::parse(fixtures::bubble_sort_noisy());
  const auto ids = toy.encode(motivating.tokens());
  const auto expected = toy.forward(ids).attention;
  const TokenContribution one = token_contributions(attention_weights(toy, motivating));
  r.require(one.scores.size() == expected.size(), "toy map has the wrong length");
  for (std::size_t i = 0; i < expected.size() && i < one.scores.size(); ++i) {
    r.require(std::abs(one.scores[i] - expected[i]) <= 1e-12, "1-layer mean differs");
  }

  // Three layers with w_j(i) = (i + 1)(j + 1) / 100, so the mean is (i + 1) / 50.
  const CodeSnippet small = CodeSnippet::parse("total = first + second * 2\n");
  AttentionMap three;
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> layer;
    for (std::size_t i = 0; i < small.tokens().size(); ++i) {
      layer.push_back(static_cast<double>((i + 1) * (j + 1)) / 100.0);
    }
    three.weights.push_back(layer);
  }
  const TokenContribution means = token_contributions(three);
  for (std::size_t i = 0; i < means.scores.size(); ++i) {
    r.require(std::abs(means.scores[i] - static_cast<double>(i + 1) / 50.0) <= 1e-12,
              "3-layer mean differs at token " + std::to_string(i));
  }

  // Random fixtures against a selection-sort oracle. Weights are coarse so
  // that score ties are common.
  std::vector<CodeSnippet> pool;
  for (auto& rec : synthetic(10, 3).records) pool.push_back(rec.code);
  for (const auto& src : fixtures::python_samples()) pool.push_back(CodeSnippet::parse(src));
  Rng rng(31337);
  std::size_t tie_fixtures = 0;
  for (int f = 0; f < 200; ++f) {
    const CodeSnippet& s = pool[rng.below(pool.size())];
    const std::size_t m = s.tokens().size();
    const std::size_t layers = 1 + rng.below(4);
    std::vector<std::vector<double>> w(layers, std::vector<double>(m));
    for (auto& layer : w) {
      for (double& v : layer) v = static_cast<double>(rng.below(5)) / 10.0;
    }
    const ScriptedBackend backend([](const CodeSnippet&) { return std::vector<double>{1.0}; },
                                  [&](const CodeSnippet&) { return w; });
    const RankedNoiseList ranked = rank_noisy_identifiers(s, backend);

    struct Row {
      std::string name;
      double score;
      std::size_t first;
    };
    std::vector<Row> rows;
    for (const auto& e : s.identifiers().entries()) {
      double best = -1.0;
      for (std::size_t i : e.occurrences) {
        double sum = 0.0;
        for (std::size_t j = 0; j < layers; ++j) sum += w[j][i];
        best = std::max(best, sum / static_cast<double>(layers));
      }
      rows.push_back({e.name, best, *std::min_element(e.occurrences.begin(), e.occurrences.end())});
    }
    std::vector<Row> sorted;
    std::set<double> distinct;
    for (const auto& row : rows) distinct.insert(row.score);
    if (distinct.size() < rows.size()) ++tie_fixtures;
    while (!rows.empty()) {
      std::size_t pick = 0;
      for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k].score > rows[pick].score ||
            (rows[k].score == rows[pick].score && rows[k].first < rows[pick].first)) {
          pick = k;
        }
      }
      sorted.push_back(rows[pick]);
      rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    r.require(ranked.size() == sorted.size(), "ranking length differs");
    for (std::size_t k = 0; k < sorted.size() && k < ranked.size(); ++k) {
      r.require(ranked[k].name == sorted[k].name, "ranking order differs in fixture " + std::to_string(f));
      r.require(std::abs(ranked[k].score - sorted[k].score) <= 1e-12, "identifier score differs");
    }
  }
  if (r.pass) {
    r.detail = "layer means exact; 200 random rankings match (" + std::to_string(tie_fixtures) +
               " with ties)";
  }
  return r;
}

// ---------------------------------------------------------------------------

Result deepgini() {
  Result r;
  for (std::size_t c : {2u, 4u, 10u}) {
    const double u = deepgini_uncertainty(Prediction(std::vector<double>(c, 1.0 / static_cast<double>(c))));
    // 1/10 is not representable, so summing ten squares may land a few ulps
    // away from the closed form.
    const double exact = 1.0 - 1.0 / static_cast<double>(c);
    r.require(std::abs(u - exact) <= 4 * std::numeric_limits<double>::epsilon(),
              "uniform C=" + std::to_string(c) + " gives " + fmt(u, 17));
    std::vector<double> onehot(c, 0.0);
    onehot[c - 1] = 1.0;
    r.require(deepgini_uncertainty(Prediction(onehot)) == 0.0, "one-hot is not 0");
  }

  Rng rng(404);
  std::size_t warnings = 0;
  for (int f = 0; f < 200; ++f) {
    std::vector<std::pair<double, bool>> items;
    const std::size_t levels = 2 + rng.below(30);
    const double positive_rate = 0.1 + 0.8 * rng.unit();
    for (int i = 0; i < 100; ++i) {
      const bool positive = rng.unit() < positive_rate;
      // Positives skew high; coarse levels create ties.
      double level = static_cast<double>(rng.below(levels));
      if (positive) level = std::min<double>(static_cast<double>(levels - 1), level + static_cast<double>(rng.below(levels)));
      items.emplace_back(level / static_cast<double>(levels), positive);
    }
    std::size_t p = 0, n = 0;
    for (auto& [s, pos] : items) (pos ? p : n)++;
    if (p == 0 || n == 0) continue;

    // Exhaustive scan over every observed score as a threshold.
    std::set<double> thresholds;
    for (auto& [s, pos] : items) thresholds.insert(s);
    bool found = false, fallback_found = false;
    double best_t = 0, best_tpr = -1, best_fpr = 0, fb_t = 0, fb_tpr = 0, fb_fpr = 2;
    for (double t : thresholds) {
      std::size_t tp = 0, fp = 0;
      for (auto& [s, pos] : items) {
        if (s >= t) (pos ? tp : fp)++;
      }
      const double tpr = static_cast<double>(tp) / static_cast<double>(p);
      const double fpr = static_cast<double>(fp) / static_cast<double>(n);
      if (fpr <= 0.05 && (tpr > best_tpr || (tpr == best_tpr && t < best_t))) {
        best_t = t, best_tpr = tpr, best_fpr = fpr, found = true;
      }
      if (fpr < fb_fpr || (fpr == fb_fpr && t < fb_t)) {
        fb_t = t, fb_tpr = tpr, fb_fpr = fpr, fallback_found = true;
      }
    }
    const ZetaCalibration got = calibrate_zeta(items);
    if (found) {
      r.require(!got.warning && got.config.zeta == best_t && got.true_positive_rate == best_tpr &&
                    got.false_positive_rate == best_fpr,
                "calibration differs from scan in fixture " + std::to_string(f));
    } else {
      ++warnings;
      r.require(fallback_found && got.warning && got.config.zeta == fb_t &&
                    got.true_positive_rate == fb_tpr && got.false_positive_rate == fb_fpr,
                "fallback differs from scan in fixture " + std::to_string(f));
    }
  }
  if (r.pass) {
    r.detail = "uniform within 4 ulp, one-hot exact; 200 calibrations match the scan (" +
               std::to_string(warnings) + " fallbacks)";
  }
  return r;
}

// ---------------------------------------------------------------------------

// Greedy cleansing replayed over name vectors instead of code.
struct ReferenceStep {
  std::string identifier, proposal;
  StepAction action;
  double before;
  std::optional<double> after;
};

Result cleanse_fidelity() {
  Result r;
  constexpr std::size_t classes = 3;
  const std::string no_candidate_marker = "__none__";
  std::map<StepAction, std::size_t> seen;
  std::size_t kept_chains = 0;
  Rng rng(8080);

  for (int f = 0; f < 400; ++f) {
    const std::size_t k = 3 + rng.below(4);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) names.push_back("id" + std::to_string(i));
    std::string code = "def " + names[0] + "(";
    for (std::size_t i = 1; i < k; ++i) code += (i > 1 ? ", " : "") + names[i];
    code += "):\n    return " + names[k - 1] + "\n";
    const CodeSnippet x = CodeSnippet::parse(code);

    // Probability table over name vectors, filled from a seeded hash.
    const std::uint64_t table_seed = rng.next();
    std::map<std::string, std::vector<double>> table;
    auto probabilities = [&](const std::vector<std::string>& state) {
      const std::string key = join(state);
      auto it = table.find(key);
      if (it != table.end()) return it->second;
      Rng cell(fnv1a(key, table_seed));
      std::vector<double> p(classes);
      double sum = 0.0;
      for (double& v : p) sum += (v = 0.05 + cell.unit());
      // Keep the original label likely so that lower-confidence steps occur.
      p[0] += 0.9 * sum * cell.unit();
      sum = 0.0;
      for (double v : p) sum += v;
      for (double& v : p) v /= sum;
      return table[key] = p;
    };
    const std::uint64_t fill_seed = rng.next();
    // Proposal for slot given the other slots' names: a fresh name, another
    // slot's current name (collision) or nothing.
    auto propose = [&](std::size_t slot, const std::vector<std::string>& state) -> std::string {
      std::vector<std::string> others = state;
      others[slot] = "?";
      Rng cell(fnv1a(join(others) + std::to_string(slot), fill_seed));
      const std::size_t roll = cell.below(10);
      if (roll == 0) return no_candidate_marker;
      if (roll <= 2) return state[cell.below(state.size())];
      return "fresh" + std::to_string(cell.below(4));
    };

    const ScriptedBackend backend([&](const CodeSnippet& s) { return probabilities(slot_names(s)); });
    std::vector<std::size_t> first_positions;
    for (const auto& e : x.identifiers().entries()) first_positions.push_back(e.occurrences.front());
    std::sort(first_positions.begin(), first_positions.end());
    const ScriptedFiller filler([&](const MaskedSnippet& m) {
      const std::size_t pos = m.first_position();
      const std::size_t slot = static_cast<std::size_t>(
          std::find(first_positions.begin(), first_positions.end(), pos) - first_positions.begin());
      std::vector<std::string> state = slot_names(m.base);
      const std::string name = propose(slot, state);
      if (name == no_candidate_marker) throw Error(ErrorKind::no_candidate, "none");
      return name;
    });

    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    rng.shuffle(order);
    RankedNoiseList ranked;
    for (std::size_t i : order) ranked.push_back({names[i], 0.0, first_positions[i]});

    const Prediction original = classify(backend, x);
    const std::size_t c = original.label();
    CleanseConfig config;
    McipModel unused;
    const DenoiseOutcome got = cleanse(x, original, ranked, backend, config,
                                       CleanseModels{&filler, nullptr, nullptr});

    // Reference simulation.
    std::vector<std::string> state = names;
    double prob = probabilities(state)[c];
    std::vector<ReferenceStep> expected;
    std::size_t final_label = c, changed = 0;
    std::vector<double> kept;
    for (std::size_t slot : order) {
      ReferenceStep step{state[slot], "", StepAction::no_candidate, prob, std::nullopt};
      const std::string proposal = propose(slot, state);
      if (proposal == no_candidate_marker) {
        expected.push_back(step);
        continue;
      }
      step.proposal = proposal;
      if (std::find(state.begin(), state.end(), proposal) != state.end()) {
        step.action = StepAction::discarded_collision;
        expected.push_back(step);
        continue;
      }
      std::vector<std::string> next = state;
      next[slot] = proposal;
      const std::vector<double> p = probabilities(next);
      const std::size_t label =
          static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      step.after = p[c];
      if (label != c) {
        step.action = StepAction::flipped;
        expected.push_back(step);
        final_label = label;
        state = next;
        ++changed;
        break;
      }
      if (p[c] < prob) {
        step.action = StepAction::kept_lower_confidence;
        prob = p[c];
        state = next;
        kept.push_back(prob);
        ++changed;
      } else {
        step.action = StepAction::discarded_no_gain;
      }
      expected.push_back(step);
    }

    r.require(got.trace.size() == expected.size(), "trace length differs in fixture " + std::to_string(f));
    for (std::size_t i = 0; i < expected.size() && i < got.trace.size(); ++i) {
      const CleanseStep& a = got.trace[i];
      const ReferenceStep& b = expected[i];
      r.require(a.identifier == b.identifier && a.proposal == b.proposal && a.action == b.action &&
                    a.confidence_before == b.before && a.confidence_after == b.after,
                "step " + std::to_string(i) + " differs in fixture " + std::to_string(f));
      ++seen[a.action];
    }
    r.require(got.final_label == final_label, "final label differs");
    r.require(got.changed_identifiers == changed, "changed count differs");
    r.require(slot_names(got.denoised) == state, "denoised snippet differs");
    for (std::size_t i = 1; i < kept.size(); ++i) {
      r.require(kept[i] < kept[i - 1], "accepted confidences not strictly decreasing");
    }
    // Library trace itself: accepted non-flip confidences strictly decrease.
    double last = original.probability(c);
    for (const auto& s : got.trace) {
      if (s.action == StepAction::kept_lower_confidence) {
        r.require(*s.confidence_after < last, "library accepted a non-decreasing step");
        last = *s.confidence_after;
      }
    }
    kept_chains += kept.size() >= 2;
  }
  for (StepAction a : {StepAction::flipped, StepAction::kept_lower_confidence,
                       StepAction::discarded_collision, StepAction::discarded_no_gain,
                       StepAction::no_candidate}) {
    r.require(seen[a] > 0, "action never exercised: " + std::string(to_string(a)));
  }
  if (r.pass) {
    std::string counts;
    for (auto& [a, n] : seen) counts += std::string(to_string(a)) + "=" + std::to_string(n) + " ";
    r.detail = "400 fixtures match; " + counts + "; " + std::to_string(kept_chains) +
               " with 2+ accepted steps";
  }
  return r;
}

// ---------------------------------------------------------------------------

Result metrics_arithmetic() {
  Result r;
  auto rec = [](std::size_t label, std::size_t before, std::size_t after) {
    OutcomeRecord o;
    o.label = label;
    o.original_label = before;
    o.final_label = after;
    return o;
  };
  const std::vector<OutcomeRecord> ten = {rec(0, 1, 0), rec(0, 1, 0), rec(0, 1, 1), rec(0, 1, 1),
                                          rec(1, 1, 0), rec(1, 1, 1), rec(1, 1, 1), rec(1, 1, 1),
                                          rec(1, 1, 1), rec(1, 1, 1)};
  const RepetitionMetrics m = compute_metrics(ten);
  r.require(m.csr && fmt(*m.csr * 100, 2) == "50.00", "CSR wrong");
  r.require(m.mcr && fmt(*m.mcr * 100, 2) == "16.67", "MCR wrong");
  r.require(m.csr && *m.csr == 2.0 / 4.0 && m.mcr && *m.mcr == 1.0 / 6.0, "rates not exact");
  r.require(m.accuracy_before == 6.0 / 10.0 && m.accuracy_after == 7.0 / 10.0, "accuracy wrong");
  if (r.pass) {
    r.detail = "CSR " + fmt(*m.csr * 100, 2) + "%, MCR " + fmt(*m.mcr * 100, 2) + "%, accuracy " +
               fmt(m.accuracy_before * 100, 0) + "% -> " + fmt(m.accuracy_after * 100, 0) + "%";
  }
  return r;
}

// ---------------------------------------------------------------------------

Result gradient_check() {
  Result r;
  Rng rng(99);
  double worst = 0.0;
  for (int instance = 0; instance < 50; ++instance) {
    ToyConfig config;
    config.classes = 2 + rng.below(3);
    config.dim = 3 + rng.below(4);
    config.buckets = 8;
    config.init_scale = 0.5;
    config.seed = rng.next();
    ToyClassifier model(config);
    std::vector<std::size_t> ids(1 + rng.below(6));
    for (auto& b : ids) b = rng.below(config.buckets);
    const std::size_t label = rng.below(config.classes);
    const ToyGradient g = model.gradient(ids, label);

    double diff = 0.0, scale = 0.0;
    const double h = 1e-5;
    auto compare = [&](std::vector<double>& params, std::size_t i, double analytic) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = model.loss(ids, label);
      params[i] = saved - h;
      const double down = model.loss(ids, label);
      params[i] = saved;
      const double numeric = (up - down) / (2 * h);
      diff += (analytic - numeric) * (analytic - numeric);
      scale += analytic * analytic + numeric * numeric;
    };
    for (std::size_t i = 0; i < model.output().size(); ++i) compare(model.output(), i, g.output[i]);
    for (std::size_t i = 0; i < config.dim; ++i) compare(model.query(), i, g.query[i]);
    for (std::size_t b = 0; b < config.buckets; ++b) {
      for (std::size_t k = 0; k < config.dim; ++k) {
        double a = 0.0;
        for (const auto& [bucket, row] : g.embeddings) {
          if (bucket == b) a = row[k];
        }
        compare(model.embeddings(), b * config.dim + k, a);
      }
    }
    const double rel = std::sqrt(diff) / std::max(std::sqrt(scale), 1e-12);
    worst = std::max(worst, rel);
  }
  r.require(worst <= 1e-4, "worst relative error " + std::to_string(worst));
  if (r.pass) {
    std::ostringstream out;
    out << "50 instances, worst relative error " << worst;
    r.detail = out.str();
  }
  return r;
}

// ---------------------------------------------------------------------------

// Desk-scale corpus shared by the ablation: rich names in training, test
// snippets with a class statement and fewer markers.
struct DeskSetup {
  Corpus train, test;
};

DeskSetup desk_corpus() {
  SyntheticConfig train_config;
  train_config.per_class = 375;
  train_config.marker_rate = 0.7;
  train_config.label_noise = 0.05;
  train_config.class_statement_rate = 0.5;
  train_config.seed = 1;
  SyntheticConfig test_config = train_config;
  test_config.per_class = 125;
  test_config.marker_rate = 0.2;
  test_config.label_noise = 0.0;
  test_config.class_statement_rate = 1.0;
  test_config.seed = 1001;
  return {generate_synthetic(train_config, "train", "tr"), generate_synthetic(test_config, "test", "te")};
}

Result ablation() {
  Result r;
  const auto start = Clock::now();
  const DeskSetup desk = desk_corpus();
  const ToyClassifier model = train_toy(desk.train.records, ToyConfig{});
  auto accuracy = [&](const Corpus& c) {
    std::size_t ok = 0;
    for (const auto& rec : c.records) ok += model.classify(rec.code).label() == rec.label;
    return static_cast<double>(ok) / static_cast<double>(c.size());
  };
  const double clean = accuracy(desk.test);
  const Vocabulary vocab = build_vocabulary(desk.train.sources(), "train").vocabulary;
  const McipModel mcip = train_mcip(desk.train.records, model);
  const McipModel mip = train_mip(desk.train.records);
  Rng rng(7);
  const Injection injection =
      inject_noise(desk.test, class_marker_pools(desk.train, 4, 0.8), 0.3, rng);
  const double noisy = accuracy(injection.corpus);
  const PipelineModels models{&model, &mcip, &mip, &vocab};

  auto run = [&](LocalizerKind localizer, CleanseStrategy strategy) {
    PipelineConfig config;
    config.localizer = localizer;
    config.cleanse.strategy = strategy;
    config.repetitions = 5;
    return evaluate(injection.corpus, config, models);
  };
  const MetricsReport full = run(LocalizerKind::attention, CleanseStrategy::mcip);
  const MetricsReport rand_l = run(LocalizerKind::random, CleanseStrategy::mcip);
  const MetricsReport rand_c = run(LocalizerKind::attention, CleanseStrategy::random);
  const double elapsed = seconds_since(start);

  std::ostringstream table;
  auto row = [&](const char* name, const MetricsReport& m) {
    table << "    " << name << " CSR " << fmt(m.csr.value_or(-1)) << " MCR " << fmt(m.mcr.value_or(-1))
          << " acc " << fmt(m.accuracy_before) << " -> " << fmt(m.accuracy_after) << " changed "
          << fmt(m.mean_changed_identifiers, 3) << " time " << fmt(m.mean_denoise_seconds * 1000, 3)
          << " ms\n";
  };
  row("full ", full);
  row("randL", rand_l);
  row("randC", rand_c);

  const double csr = full.csr.value_or(0), mcr = full.mcr.value_or(1);
  r.require(desk.train.size() + desk.test.size() == 2000, "corpus is not ~2000 snippets");
  r.require(clean >= 0.9, "clean test accuracy " + fmt(clean));
  r.require(noisy < clean, "injection did not lower accuracy");
  r.require(csr > rand_l.csr.value_or(0), "full CSR " + fmt(csr) + " not above randL " + fmt(rand_l.csr.value_or(0)));
  r.require(csr > rand_c.csr.value_or(0), "full CSR not above randC");
  r.require(mcr <= rand_l.mcr.value_or(1), "full MCR above randL");
  r.require(mcr <= rand_c.mcr.value_or(1), "full MCR above randC");
  r.require(full.mean_changed_identifiers < rand_l.mean_changed_identifiers,
            "changed identifiers not below randL");
  r.require(full.accuracy_after > full.accuracy_before, "accuracy did not improve");
  r.require(elapsed < 300.0, "took " + fmt(elapsed, 1) + " s");
  r.require(full.mean_denoise_seconds <= 0.05, "mean denoise time above 50 ms");
  const std::string summary = "clean acc " + fmt(clean) + ", injected acc " + fmt(noisy) + ", " +
                              fmt(elapsed, 1) + " s\n" + table.str();
  r.detail = r.pass ? summary : r.detail + "; " + summary;
  if (!r.detail.empty() && r.detail.back() == '\n') r.detail.pop_back();
  return r;
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string command = std::string(CODEDENOISE_CLI) + " " + args + " > /dev/null 2>&1";
  return std::system(command.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Result determinism() {
  Result r;
  const fs::path dir = fs::temp_directory_path() / ("codedenoise-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = dir.string();
  auto step = [&](const std::string& args) {
    r.require(run_cli(args) == 0, "command failed: codedenoise " + args);
  };
  step("generate --out " + d + "/train.ndjson --split train --per-class 100 --marker-rate 0.7 --seed 1");
  step("generate --out " + d + "/test.ndjson --split test --per-class 25 --marker-rate 0.2 "
       "--class-statement-rate 1 --seed 2");
  step("train --train " + d + "/train.ndjson --out " + d + "/model");
  step("vocab --train " + d + "/train.ndjson --out " + d + "/vocab.txt");
  step("inject --input " + d + "/test.ndjson --train " + d + "/train.ndjson --rate 0.3 --seed 7 --out " +
       d + "/noisy.ndjson");
  {
    std::ofstream cfg(dir / "config.txt");
    cfg << "repetitions = 3\nseed = 17\nworkers = 1\n";
    std::ofstream par(dir / "parallel.txt");
    par << "repetitions = 3\nseed = 17\nworkers = 4\n";
  }
  const std::string common = " --model " + d + "/model --vocab " + d + "/vocab.txt --test " + d + "/noisy.ndjson";
  step("evaluate --config " + d + "/config.txt" + common + " --out " + d + "/run1");
  step("evaluate --config " + d + "/config.txt" + common + " --out " + d + "/run2");
  step("evaluate --config " + d + "/parallel.txt" + common + " --out " + d + "/run3");
  const std::string a = slurp(dir / "run1/outcomes.ndjson");
  const std::string b = slurp(dir / "run2/outcomes.ndjson");
  const std::string c = slurp(dir / "run3/outcomes.ndjson");
  r.require(!a.empty(), "no outcomes written");
  r.require(a == b, "reruns differ");
  r.require(a == c, "worker count changed the outcomes");
  if (r.pass) {
    r.detail = "outcomes.ndjson identical across two runs and with 4 workers (" +
               std::to_string(std::count(a.begin(), a.end(), '\n')) + " records)";
  }
  fs::remove_all(dir);
  return r;
}

// ---------------------------------------------------------------------------

ErrorKind raised(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::usage;
}

Result protocol_conformance() {
  using protocol::SubprocessBackend;
  Result r;
  const std::string server = CODEDENOISE_LOOPBACK;
  const ToyClassifier local{ToyConfig{}};
  const CodeSnippet s = CodeSnippet::parse(fixtures::bubble_sort_noisy());

  {
    SubprocessBackend b(server);
    r.require(b.has_capability("classify") && b.has_capability("attention") &&
                  b.has_capability("mask_fill"),
              "handshake lacks capabilities");
    const auto remote = b.classify(s).probabilities();
    const auto mine = local.classify(s).probabilities();
    r.require(remote.size() == mine.size(), "classify length differs");
    for (std::size_t i = 0; i < remote.size() && i < mine.size(); ++i) {
      r.require(std::abs(remote[i] - mine[i]) <= 1e-12, "classify differs from in-process model");
    }
    const AttentionMap a = b.attention_weights(s);
    const AttentionMap want = local.attention_weights(s);
    r.require(a.layers() == 1 && a.weights[0].size() == want.weights[0].size(), "attention shape differs");
    for (std::size_t i = 0; i < want.weights[0].size() && a.layers() == 1 && i < a.weights[0].size(); ++i) {
      r.require(std::abs(a.weights[0][i] - want.weights[0][i]) <= 1e-12, "attention differs");
    }
    r.require(b.mask_fill(mask_identifier(s, "a1_selection")) == "count", "mask_fill differs");
    const auto unknown = b.raw_call({{"op", "explode"}, {"code", "x = 1"}});
    r.require(unknown.value("ok", true) == false, "unknown op accepted");
  }
  {
    SubprocessBackend b(server + " --fault subtoken");
    const AttentionMap a = b.attention_weights(s);
    const AttentionMap want = local.attention_weights(s);
    bool same = a.layers() == 1 && a.weights[0].size() == want.weights[0].size();
    for (std::size_t i = 0; same && i < want.weights[0].size(); ++i) {
      same = std::abs(a.weights[0][i] - want.weights[0][i]) <= 1e-12;
    }
    r.require(same, "sub-token alignment differs");
  }
  {
    SubprocessBackend b(server + " --fault bad-sum");
    r.require(raised([&] { b.classify(s); }) == ErrorKind::protocol,
              "non-normalized probabilities accepted");
  }
  {
    SubprocessBackend b(server + " --fault wrong-id");
    r.require(raised([&] { b.classify(s); }) == ErrorKind::protocol, "mismatched id accepted");
  }
  {
    SubprocessBackend b(server + " --fault garbage");
    r.require(raised([&] { b.classify(s); }) == ErrorKind::protocol, "malformed line accepted");
  }
  {
    SubprocessBackend b(server + " --fault no-attention");
    r.require(!b.supports_attention(), "attention advertised");
    r.require(raised([&] { attention_weights(b, s); }) == ErrorKind::capability,
              "missing attention not a capability error");
  }
  {
    SubprocessBackend b(server + " --fault no-mask-fill");
    r.require(raised([&] { b.mask_fill(mask_identifier(s, "a1_selection")); }) == ErrorKind::capability,
              "missing mask_fill not a capability error");
  }
  {
    SubprocessBackend b(server + " --exit-after 1");
    b.classify(s);
    r.require(raised([&] { b.classify(s); }) == ErrorKind::transport, "dead backend not a transport error");
  }
  r.require(raised([&] { SubprocessBackend b("exit 0"); }) == ErrorKind::transport,
            "missing handshake not a transport error");
  if (r.pass) r.detail = "handshake, classify, attention, sub-tokens, mask_fill and 7 error paths";
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria = {
      {"rename safety", rename_safety},
      {"detector oracle equivalence", detector_oracle},
      {"attention aggregation", attention_aggregation},
      {"DeepGini", deepgini},
      {"cleansing loop fidelity", cleanse_fidelity},
      {"metrics arithmetic", metrics_arithmetic},
      {"toy model gradient check", gradient_check},
      {"desk-scale ablation ordering", ablation},
      {"determinism", determinism},
      {"protocol conformance", protocol_conformance},
  };
  std::size_t passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result result;
    try {
      result = criteria[i].second();
    } catch (const std::exception& e) {
      result = {false, std::string("exception: ") + e.what()};
    }
    passed += result.pass;
    std::cout << "criterion " << i + 1 << ": " << (result.pass ? "PASS" : "FAIL") << " - "
              << criteria[i].first << " (" << result.detail << ")\n"
              << std::flush;
  }
  std::cout << passed << "/" << criteria.size() << " criteria pass\n";
  return strict && passed != criteria.size() ? 1 : 0;
}

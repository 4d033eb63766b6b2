#pragma once

// Generator for a small labeled Python corpus. Each class has its own
// statement templates and its own pool of marker names; neutral names are
// shared. Used for desk-scale experiments and tests.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "codedenoise/harness/corpus.hpp"
#include "codedenoise/random.hpp"

namespace codedenoise {

struct SyntheticConfig {
  std::size_t per_class = 500;
  double marker_rate = 0.5;  // chance a variable slot gets a class marker
  double label_noise = 0.0;  // chance a slot gets another class's marker
  double class_statement_rate = 0.3;  // chance of one class-specific statement
  std::uint64_t seed = 1;
};

namespace synthetic {

inline constexpr std::size_t classes = 4;

inline const std::array<std::vector<std::string>, classes>& markers() {
  static const std::array<std::vector<std::string>, classes> pools{{
      {"swapped", "pivot", "ascending", "bubble", "ordered", "smallest",
       "largest", "ranked", "heap", "merged", "partition", "inversions"},
      {"words", "sentence", "chars", "token", "prefix", "suffix", "vowels",
       "letters", "phrase", "substring", "caps", "spaces"},
      {"total", "product", "square", "root", "factor", "power", "digits",
       "quotient", "remainder", "prime", "modulus", "divisor"},
      {"visited", "neighbors", "edges", "queue", "frontier", "parent", "depth",
       "graph", "nodes", "stack", "path", "degree"},
  }};
  return pools;
}

inline const std::vector<std::string>& neutral_names() {
  static const std::vector<std::string> names{
      "data", "value", "item", "result", "temp", "x",   "y",   "idx", "k",   "out",
      "res",  "buf",   "cur",  "acc",    "val",  "obj", "arg", "elem", "tmp", "num"};
  return names;
}

inline const std::vector<std::string>& generic_statements() {
  static const std::vector<std::string> s{
      "    {a} = {a} + {b}\n",
      "    if {a} > {b}:\n        {b} = {a}\n",
      "    for {b} in {p}:\n        {a} = {b}\n",
      "    {b} = {p}\n",
      "    while {a} < {b}:\n        {a} = {a} + 1\n",
  };
  return s;
}

inline const std::array<std::vector<std::string>, classes>& class_statements() {
  static const std::array<std::vector<std::string>, classes> s{{
      {"    {a} = sorted({p})\n",
       "    {p}[{b}], {p}[{a}] = {p}[{a}], {p}[{b}]\n",
       "    {a} = min({p}, key=len)\n",
       "    {p}.sort(reverse=True)\n"},
      {"    {a} = {p}.split()\n",
       "    {a} = ''.join({b})\n",
       "    {a} = {p}.lower().strip()\n",
       "    {b} = {a}.replace(' ', '')\n"},
      {"    {a} = {b} ** 2\n",
       "    {a} = {p} % {b}\n",
       "    {a} = abs({b}) // 3\n",
       "    {b} = {a} * {a} - 1\n"},
      {"    {a}.append({b})\n",
       "    {a} = {p}.pop()\n",
       "    {b} = {a}.get({p})\n",
       "    {a}.extend({b})\n"},
  }};
  return s;
}

inline std::string fill(std::string text, const std::string& key, const std::string& value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos)) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace synthetic

// Produces per_class * 4 records, interleaved by class, ids "<prefix><n>".
inline Corpus generate_synthetic(const SyntheticConfig& config, const std::string& split,
                                 const std::string& prefix = "s") {
  using namespace synthetic;
  Rng rng(config.seed);
  Corpus corpus{split, {}};
  const auto& neutral = neutral_names();
  for (std::size_t n = 0; n < config.per_class * classes; ++n) {
    const std::size_t label = n % classes;
    auto pick_name = [&](std::vector<std::string>& used) {
      for (;;) {
        std::string name;
        const double u = rng.unit();
        if (u < config.label_noise) {
          const std::size_t other = (label + 1 + rng.below(classes - 1)) % classes;
          name = markers()[other][rng.below(markers()[other].size())];
        } else if (u < config.label_noise + config.marker_rate) {
          name = markers()[label][rng.below(markers()[label].size())];
        } else {
          name = neutral[rng.below(neutral.size())];
        }
        if (std::find(used.begin(), used.end(), name) == used.end()) {
          used.push_back(name);
          return name;
        }
      }
    };
    std::vector<std::string> used;
    const std::string f = pick_name(used);
    const std::string p = pick_name(used);
    const std::string a = pick_name(used);
    const std::string b = pick_name(used);

    std::vector<std::string> body;
    if (rng.unit() < config.class_statement_rate) {
      body.push_back(class_statements()[label][rng.below(class_statements()[label].size())]);
    }
    while (body.size() < 3) {
      body.push_back(generic_statements()[rng.below(generic_statements().size())]);
    }
    rng.shuffle(body);
    std::string code = "def " + f + "(" + p + "):\n    " + a + " = " + p + "\n    " +
                       b + " = 0\n";
    for (const auto& s : body) code += s;
    code += "    return " + a + "\n";
    code = fill(fill(fill(code, "{p}", p), "{a}", a), "{b}", b);
    corpus.records.push_back(
        LabeledSnippet{prefix + std::to_string(n), CodeSnippet::parse(code), label});
  }
  return corpus;
}

}  // namespace codedenoise

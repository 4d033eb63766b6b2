#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "codedenoise/error.hpp"
#include "codedenoise/kernel/code_snippet.hpp"

namespace codedenoise {

// Candidate replacement names. Stored sorted and deduplicated so that seeded
// draws from it are reproducible.
class Vocabulary {
 public:
  Vocabulary() = default;

  Vocabulary(std::vector<std::string> names, std::string provenance,
             Language language = Language::python)
      : provenance_(std::move(provenance)) {
    const Grammar& grammar = grammar_for(language);
    for (const std::string& name : names) {
      if (!grammar.is_legal_identifier(name)) {
        throw Error(ErrorKind::illegal_name,
                    "vocabulary entry '" + name + "' is not a legal identifier");
      }
    }
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    names_ = std::move(names);
  }

  const std::vector<std::string>& names() const { return names_; }
  const std::string& provenance() const { return provenance_; }
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }

  bool contains(std::string_view name) const {
    return std::binary_search(names_.begin(), names_.end(), name);
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::usage, "cannot write " + path);
    out << "# provenance: " << provenance_ << "\n";
    for (const std::string& name : names_) out << name << "\n";
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::usage, "cannot read " + path);
    std::string line, provenance;
    std::vector<std::string> names;
    while (std::getline(in, line)) {
      if (line.rfind("# provenance: ", 0) == 0) {
        provenance = line.substr(14);
      } else if (!line.empty() && line[0] != '#') {
        names.push_back(line);
      }
    }
    return Vocabulary(std::move(names), std::move(provenance));
  }

 private:
  std::vector<std::string> names_;
  std::string provenance_;
};

// V minus every name the snippet already uses (renamable or fixed).
inline std::vector<std::string> candidate_pool(const Vocabulary& vocab,
                                               const IdentifierSet& present) {
  std::vector<std::string> out;
  for (const std::string& name : vocab.names()) {
    if (!present.taken(name)) out.push_back(name);
  }
  return out;
}

struct VocabularyBuild {
  Vocabulary vocabulary;
  std::size_t skipped = 0;   // sources that failed to parse
  bool empty_warning = false;
};

// Union of the renamable identifiers over a corpus of raw sources.
inline VocabularyBuild build_vocabulary(const std::vector<std::string>& sources,
                                        std::string provenance,
                                        Language language = Language::python) {
  if (sources.empty()) {
    throw Error(ErrorKind::validation, "vocabulary corpus is empty");
  }
  std::vector<std::string> names;
  std::size_t skipped = 0;
  for (const std::string& source : sources) {
    try {
      CodeSnippet snippet = CodeSnippet::parse(source, language);
      for (const IdentifierEntry& e : snippet.identifiers().entries()) {
        names.push_back(e.name);
      }
    } catch (const SyntaxError&) {
      ++skipped;
    }
  }
  Vocabulary vocab(std::move(names), std::move(provenance), language);
  const bool empty = vocab.empty();
  return VocabularyBuild{std::move(vocab), skipped, empty};
}

}  // namespace codedenoise

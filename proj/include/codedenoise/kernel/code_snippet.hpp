#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "codedenoise/error.hpp"
#include "codedenoise/kernel/grammar.hpp"

namespace codedenoise {

struct IdentifierEntry {
  std::string name;
  std::vector<std::size_t> occurrences;  // token indices, ascending

  friend bool operator==(const IdentifierEntry&, const IdentifierEntry&) = default;
};

// The renamable identifiers of a snippet, ordered by first occurrence, plus
// the names that are in use but must not be renamed or reused (imports,
// free references such as builtins, class members, keyword-argument names).
class IdentifierSet {
 public:
  IdentifierSet() = default;
  IdentifierSet(std::vector<IdentifierEntry> entries,
                std::set<std::string, std::less<>> fixed)
      : entries_(std::move(entries)), fixed_(std::move(fixed)) {}

  const std::vector<IdentifierEntry>& entries() const { return entries_; }
  const std::set<std::string, std::less<>>& fixed_names() const {
    return fixed_;
  }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const IdentifierEntry* find(std::string_view name) const {
    for (const IdentifierEntry& e : entries_) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }

  bool contains(std::string_view name) const { return find(name) != nullptr; }

  // True when `name` cannot be introduced without changing meaning.
  bool taken(std::string_view name) const {
    return contains(name) || fixed_.count(name) != 0;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const IdentifierEntry& e : entries_) out.push_back(e.name);
    return out;
  }

 private:
  std::vector<IdentifierEntry> entries_;
  std::set<std::string, std::less<>> fixed_;
};

namespace detail {

inline IdentifierSet collect_identifiers(const Analysis& analysis) {
  std::set<std::string, std::less<>> bound;
  std::set<std::string, std::less<>> fixed = analysis.fixed_names;
  for (std::size_t i = 0; i < analysis.tokens.size(); ++i) {
    if (analysis.uses[i] == NameUse::binding) {
      bound.insert(analysis.tokens[i].lexeme);
    } else if (analysis.uses[i] == NameUse::fixed) {
      fixed.insert(analysis.tokens[i].lexeme);
    }
  }
  std::vector<IdentifierEntry> entries;
  std::map<std::string, std::size_t, std::less<>> index;
  std::set<std::string, std::less<>> in_use;
  for (std::size_t i = 0; i < analysis.tokens.size(); ++i) {
    const NameUse use = analysis.uses[i];
    if (use != NameUse::reference && use != NameUse::binding) continue;
    const std::string& lexeme = analysis.tokens[i].lexeme;
    if (!bound.count(lexeme) || fixed.count(lexeme)) {
      in_use.insert(lexeme);
      continue;
    }
    auto [it, inserted] = index.try_emplace(lexeme, entries.size());
    if (inserted) entries.push_back(IdentifierEntry{lexeme, {}});
    entries[it->second].occurrences.push_back(i);
  }
  fixed.insert(in_use.begin(), in_use.end());
  return IdentifierSet(std::move(entries), std::move(fixed));
}

}  // namespace detail

// Source text known to parse under its grammar. Immutable; copies share the
// analyzed state.
class CodeSnippet {
 public:
  // Throws SyntaxError when the source does not parse.
  static CodeSnippet parse(std::string source,
                           Language language = Language::python) {
    auto state = std::make_shared<State>();
    state->source = std::move(source);
    state->language = language;
    Analysis analysis = grammar_for(language).analyze(state->source);
    state->identifiers = detail::collect_identifiers(analysis);
    state->tokens = std::move(analysis.tokens);
    state->digest = analysis.digest;
    CodeSnippet out;
    out.state_ = std::move(state);
    return out;
  }

  const std::string& source() const { return state_->source; }
  Language language() const { return state_->language; }
  std::uint64_t digest() const { return state_->digest; }
  const TokenStream& tokens() const { return state_->tokens; }
  const IdentifierSet& identifiers() const { return state_->identifiers; }

  friend bool operator==(const CodeSnippet& a, const CodeSnippet& b) {
    return a.language() == b.language() && a.source() == b.source();
  }

 private:
  struct State {
    std::string source;
    Language language = Language::python;
    TokenStream tokens;
    IdentifierSet identifiers;
    std::uint64_t digest = 0;
  };

  CodeSnippet() = default;

  std::shared_ptr<const State> state_;
};

inline const TokenStream& tokenize(const CodeSnippet& snippet) {
  return snippet.tokens();
}

// Tokenizes raw text; throws SyntaxError on parse failure.
inline TokenStream tokenize(std::string_view source,
                            Language language = Language::python) {
  return grammar_for(language).analyze(source).tokens;
}

inline const IdentifierSet& extract_identifiers(const CodeSnippet& snippet) {
  return snippet.identifiers();
}

inline std::uint64_t structural_digest(const CodeSnippet& snippet) {
  return snippet.digest();
}

}  // namespace codedenoise

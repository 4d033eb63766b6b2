#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "codedenoise/error.hpp"
#include "codedenoise/kernel/code_snippet.hpp"

namespace codedenoise {

// Lexically an identifier so that masked snippets still tokenize.
inline constexpr std::string_view default_mask_sentinel = "__mask__";

namespace detail {

inline std::string substitute(const CodeSnippet& snippet,
                              const std::vector<std::size_t>& positions,
                              std::string_view replacement) {
  const std::string& src = snippet.source();
  std::string out;
  out.reserve(src.size() + positions.size() * replacement.size());
  std::size_t cursor = 0;
  for (std::size_t index : positions) {
    const Span span = snippet.tokens()[index].span;
    out.append(src, cursor, span.begin - cursor);
    out.append(replacement);
    cursor = span.end;
  }
  out.append(src, cursor, std::string::npos);
  return out;
}

inline const IdentifierEntry& require_identifier(const CodeSnippet& snippet,
                                                 std::string_view name) {
  const IdentifierEntry* entry = snippet.identifiers().find(name);
  if (entry == nullptr) {
    throw Error(ErrorKind::not_found,
                "identifier '" + std::string(name) + "' not in snippet");
  }
  return *entry;
}

}  // namespace detail

// Replaces every occurrence of `from` with `to`. The result has the same
// structural digest and the same number of identifiers.
inline CodeSnippet rename_identifier(const CodeSnippet& snippet,
                                     std::string_view from,
                                     std::string_view to) {
  const IdentifierEntry& entry = detail::require_identifier(snippet, from);
  if (!grammar_for(snippet.language()).is_legal_identifier(to)) {
    throw Error(ErrorKind::illegal_name,
                "'" + std::string(to) + "' is not a legal identifier");
  }
  if (snippet.identifiers().taken(to)) {
    throw Error(ErrorKind::collision,
                "'" + std::string(to) + "' already used in snippet");
  }
  CodeSnippet out = CodeSnippet::parse(
      detail::substitute(snippet, entry.occurrences, to), snippet.language());
  if (out.digest() != snippet.digest() ||
      out.identifiers().size() != snippet.identifiers().size()) {
    throw Error(ErrorKind::structure,
                "rename of '" + std::string(from) + "' altered structure");
  }
  return out;
}

struct MaskedSnippet {
  CodeSnippet base;
  std::string target;
  std::string sentinel;
  CodeSnippet text;                     // base with every occurrence masked
  std::vector<std::size_t> positions;   // token indices holding the sentinel

  // Index of the first sentinel token in `text`.
  std::size_t first_position() const { return positions.front(); }
};

inline MaskedSnippet mask_identifier(
    const CodeSnippet& snippet, std::string_view target,
    std::string_view sentinel = default_mask_sentinel) {
  const IdentifierEntry& entry = detail::require_identifier(snippet, target);
  for (const Token& token : snippet.tokens()) {
    if (token.lexeme == sentinel) {
      throw Error(ErrorKind::collision, "mask sentinel already in snippet");
    }
  }
  CodeSnippet text = CodeSnippet::parse(
      detail::substitute(snippet, entry.occurrences, sentinel),
      snippet.language());
  return MaskedSnippet{snippet, std::string(target), std::string(sentinel),
                       std::move(text), entry.occurrences};
}

// Locates the sentinel in already-masked text (as received over the wire).
inline std::vector<std::size_t> sentinel_positions(
    const CodeSnippet& text, std::string_view sentinel = default_mask_sentinel) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < text.tokens().size(); ++i) {
    if (text.tokens()[i].lexeme == sentinel) out.push_back(i);
  }
  return out;
}

}  // namespace codedenoise

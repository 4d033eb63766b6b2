#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "codedenoise/error.hpp"
#include "codedenoise/kernel/python_parser.hpp"
#include "codedenoise/random.hpp"

namespace codedenoise {

enum class Language { python };

enum class TokenKind { identifier, keyword, operator_, literal, other };

inline const char* to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::keyword: return "keyword";
    case TokenKind::operator_: return "operator";
    case TokenKind::literal: return "literal";
    case TokenKind::other: return "other";
  }
  return "other";
}

// Byte offsets [begin, end) into the snippet source.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

struct Token {
  std::string lexeme;
  Span span;
  TokenKind kind = TokenKind::other;

  friend bool operator==(const Token&, const Token&) = default;
};

using TokenStream = std::vector<Token>;

// Binding role of each identifier token, as reported by a grammar.
enum class NameUse : unsigned char {
  none,
  reference,
  binding,
  fixed,      // bound or referenced in a way renaming cannot follow
  attribute,  // member name; a separate namespace
};

// Language-neutral result of analyzing one source text.
struct Analysis {
  TokenStream tokens;
  std::vector<NameUse> uses;  // parallel to tokens
  std::set<std::string, std::less<>> fixed_names;
  std::uint64_t digest = 0;
};

struct Grammar {
  Language language;
  std::string_view name;
  Analysis (*analyze)(std::string_view source);
  bool (*is_legal_identifier)(std::string_view word);
};

namespace python {

inline void digest_node(const Node& node, const std::vector<RawToken>& tokens,
                        std::uint64_t& h) {
  h = fnv1a(node.kind, h);
  if (node.token != Node::npos) {
    const RawToken& t = tokens[node.token];
    if (t.kind == RawKind::name && !is_keyword(t.text)) {
      h = fnv1a("\x01<id>", h);
    } else {
      h = fnv1a("\x01", h);
      h = fnv1a(t.text, h);
    }
  }
  if (!node.children.empty()) {
    h = fnv1a("(", h);
    for (const Node& child : node.children) digest_node(child, tokens, h);
    h = fnv1a(")", h);
  }
}

inline Analysis analyze(std::string_view source) {
  ParseResult parsed = parse(source);
  Analysis out;
  for (std::size_t i = 0; i < parsed.tokens.size(); ++i) {
    const RawToken& raw = parsed.tokens[i];
    TokenKind kind;
    switch (raw.kind) {
      case RawKind::name:
        kind = is_keyword(raw.text) ? TokenKind::keyword : TokenKind::identifier;
        break;
      case RawKind::number:
      case RawKind::string:
        kind = TokenKind::literal;
        break;
      case RawKind::op:
        kind = TokenKind::operator_;
        break;
      default:
        continue;  // layout tokens carry no source text
    }
    NameUse use = NameUse::none;
    switch (parsed.roles[i]) {
      case NameRole::reference: use = NameUse::reference; break;
      case NameRole::binding: use = NameUse::binding; break;
      case NameRole::class_binding:
      case NameRole::import_binding:
      case NameRole::keyword_argument: use = NameUse::fixed; break;
      case NameRole::attribute: use = NameUse::attribute; break;
      case NameRole::none: break;
    }
    out.tokens.push_back(Token{std::string(raw.text), {raw.begin, raw.end}, kind});
    out.uses.push_back(use);
  }
  out.fixed_names = std::move(parsed.fstring_names);
  std::uint64_t h = fnv1a("python");
  digest_node(parsed.root, parsed.tokens, h);
  out.digest = h;
  return out;
}

}  // namespace python

inline const std::vector<Grammar>& grammar_registry() {
  static const std::vector<Grammar> registry = {
      Grammar{Language::python, "python", &python::analyze,
              &python::is_legal_identifier},
  };
  return registry;
}

inline const Grammar& grammar_for(Language language) {
  for (const Grammar& g : grammar_registry()) {
    if (g.language == language) return g;
  }
  throw Error(ErrorKind::usage, "no grammar registered for language");
}

inline const Grammar& grammar_for(std::string_view name) {
  for (const Grammar& g : grammar_registry()) {
    if (g.name == name) return g;
  }
  throw Error(ErrorKind::usage, "unknown language '" + std::string(name) + "'");
}

inline std::string_view to_string(Language language) {
  return grammar_for(language).name;
}

}  // namespace codedenoise

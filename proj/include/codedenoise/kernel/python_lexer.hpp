#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "codedenoise/error.hpp"

namespace codedenoise::python {

enum class RawKind {
  name,
  number,
  string,
  op,
  newline,
  indent,
  dedent,
  end_marker,
};

struct RawToken {
  RawKind kind;
  std::size_t begin;
  std::size_t end;
  std::string_view text;
  bool fstring = false;
};

inline constexpr std::array<std::string_view, 35> keywords = {
    "False",  "None",   "True",    "and",      "as",       "assert", "async",
    "await",  "break",  "class",   "continue", "def",      "del",    "elif",
    "else",   "except", "finally", "for",      "from",     "global", "if",
    "import", "in",     "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",   "raise",  "return",  "try",      "while",    "with",   "yield"};

inline bool is_keyword(std::string_view word) {
  return std::find(keywords.begin(), keywords.end(), word) != keywords.end();
}

inline bool is_name_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

inline bool is_name_char(char c) {
  return is_name_start(c) || (c >= '0' && c <= '9');
}

inline bool is_legal_identifier(std::string_view word) {
  if (word.empty() || !is_name_start(word.front())) return false;
  if (!std::all_of(word.begin(), word.end(), is_name_char)) return false;
  return !is_keyword(word);
}

// Line/column (1-based) of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(std::string_view source,
                                                       std::size_t offset) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < offset && i < source.size(); ++i) {
    if (source[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

[[noreturn]] inline void fail(std::string_view source, std::size_t offset,
                              const std::string& message) {
  auto [line, column] = line_column(source, offset);
  throw SyntaxError(message, offset, line, column);
}

// Tokenizer for the Python 3 lexical grammar (ASCII identifiers). Produces
// layout tokens (NEWLINE/INDENT/DEDENT) for the parser alongside the
// source-bearing tokens.
class Lexer {
 public:
  explicit Lexer(std::string_view source) : src_(source) {}

  std::vector<RawToken> run() {
    indents_.assign(1, 0);
    at_line_start_ = true;
    while (pos_ < src_.size()) {
      if (at_line_start_ && brackets_.empty()) {
        if (!handle_indentation()) continue;
      }
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        if (brackets_.empty() && !tokens_.empty() &&
            tokens_.back().kind != RawKind::newline) {
          push(RawKind::newline, pos_, pos_ + 1);
        }
        ++pos_;
        if (brackets_.empty()) at_line_start_ = true;
      } else if (c == '\\') {
        std::size_t next = pos_ + 1;
        if (next < src_.size() && src_[next] == '\r') ++next;
        if (next >= src_.size() || src_[next] != '\n') {
          fail(src_, pos_, "unexpected character after line continuation");
        }
        pos_ = next + 1;
      } else if (is_name_start(c)) {
        lex_name_or_string();
      } else if (c >= '0' && c <= '9') {
        lex_number();
      } else if (c == '.' && pos_ + 1 < src_.size() && src_[pos_ + 1] >= '0' &&
                 src_[pos_ + 1] <= '9') {
        lex_number();
      } else if (c == '"' || c == '\'') {
        lex_string(pos_, pos_, false);
      } else {
        lex_operator();
      }
    }
    if (!brackets_.empty()) {
      fail(src_, brackets_.back(),
           std::string("'") + src_[brackets_.back()] + "' was never closed");
    }
    if (!tokens_.empty() && tokens_.back().kind != RawKind::newline) {
      push(RawKind::newline, src_.size(), src_.size());
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      push(RawKind::dedent, src_.size(), src_.size());
    }
    push(RawKind::end_marker, src_.size(), src_.size());
    return std::move(tokens_);
  }

 private:
  void push(RawKind kind, std::size_t begin, std::size_t end,
            bool fstring = false) {
    tokens_.push_back(
        RawToken{kind, begin, end, src_.substr(begin, end - begin), fstring});
  }

  // Returns false when the line was blank and fully consumed.
  bool handle_indentation() {
    std::size_t width = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' ||
                               src_[p] == '\f')) {
      if (src_[p] == '\t') {
        width = (width / 8 + 1) * 8;
      } else if (src_[p] == ' ') {
        ++width;
      } else {
        width = 0;
      }
      ++p;
    }
    if (p < src_.size() && src_[p] == '\r') {
      ++p;
    }
    if (p >= src_.size() || src_[p] == '\n' || src_[p] == '#') {
      // Blank or comment-only line: no layout tokens.
      while (p < src_.size() && src_[p] != '\n') ++p;
      pos_ = p < src_.size() ? p + 1 : p;
      return false;
    }
    at_line_start_ = false;
    if (width > indents_.back()) {
      indents_.push_back(width);
      push(RawKind::indent, pos_, pos_);
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        push(RawKind::dedent, p, p);
      }
      if (width != indents_.back()) {
        fail(src_, p, "unindent does not match any outer indentation level");
      }
    }
    pos_ = p;
    return true;
  }

  void lex_name_or_string() {
    std::size_t p = pos_;
    while (p < src_.size() && is_name_char(src_[p])) ++p;
    if (p < src_.size() && (src_[p] == '"' || src_[p] == '\'') &&
        p - pos_ <= 2) {
      std::string prefix;
      for (std::size_t i = pos_; i < p; ++i) {
        prefix += static_cast<char>(std::tolower(src_[i]));
      }
      static constexpr std::array<std::string_view, 10> prefixes = {
          "r", "u", "b", "f", "br", "rb", "fr", "rf", "ur", "ru"};
      if (std::find(prefixes.begin(), prefixes.end(), prefix) !=
          prefixes.end()) {
        lex_string(pos_, p, prefix.find('f') != std::string::npos);
        return;
      }
    }
    push(RawKind::name, pos_, p);
    pos_ = p;
  }

  void lex_string(std::size_t begin, std::size_t quote_pos, bool fstring) {
    const char quote = src_[quote_pos];
    const bool triple = quote_pos + 2 < src_.size() &&
                        src_[quote_pos + 1] == quote &&
                        src_[quote_pos + 2] == quote;
    std::size_t p = quote_pos + (triple ? 3 : 1);
    for (;;) {
      if (p >= src_.size()) {
        fail(src_, begin, triple ? "unterminated triple-quoted string literal"
                                 : "unterminated string literal");
      }
      const char c = src_[p];
      if (c == '\\') {
        p += 2;
        continue;
      }
      if (!triple && c == '\n') {
        fail(src_, begin, "unterminated string literal");
      }
      if (c == quote) {
        if (!triple) {
          ++p;
          break;
        }
        if (p + 2 < src_.size() && src_[p + 1] == quote &&
            src_[p + 2] == quote) {
          p += 3;
          break;
        }
      }
      ++p;
    }
    push(RawKind::string, begin, p, fstring);
    pos_ = p;
  }

  void lex_number() {
    std::size_t p = pos_;
    auto digits = [&](auto pred) {
      while (p < src_.size() && (pred(src_[p]) || src_[p] == '_')) ++p;
    };
    auto dec = [](char c) { return c >= '0' && c <= '9'; };
    if (src_[p] == '0' && p + 1 < src_.size() &&
        std::string_view("xXoObB").find(src_[p + 1]) != std::string_view::npos) {
      p += 2;
      digits([](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
    } else {
      digits(dec);
      if (p < src_.size() && src_[p] == '.') {
        ++p;
        digits(dec);
      }
      if (p < src_.size() && (src_[p] == 'e' || src_[p] == 'E')) {
        std::size_t q = p + 1;
        if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
        if (q < src_.size() && dec(src_[q])) {
          p = q;
          digits(dec);
        }
      }
      if (p < src_.size() && (src_[p] == 'j' || src_[p] == 'J')) ++p;
    }
    if (p < src_.size() && is_name_char(src_[p])) {
      fail(src_, p, "invalid decimal literal");
    }
    push(RawKind::number, pos_, p);
    pos_ = p;
  }

  void lex_operator() {
    static constexpr std::array<std::string_view, 24> multi = {
        "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**",
        "//",  "<<",  ">>",  "<=",  ">=",  "==", "!=", "+=",
        "-=",  "*=",  "/=",  "%=",  "&=",  "|=", "^=", "@="};
    const std::string_view rest = src_.substr(pos_);
    for (std::string_view op : multi) {
      if (rest.substr(0, op.size()) == op) {
        push(RawKind::op, pos_, pos_ + op.size());
        pos_ += op.size();
        return;
      }
    }
    const char c = src_[pos_];
    if (std::string_view("+-*/%@&|^~<>()[]{},:;.=").find(c) ==
        std::string_view::npos) {
      fail(src_, pos_, std::string("invalid character '") + c + "'");
    }
    if (c == '(' || c == '[' || c == '{') {
      brackets_.push_back(pos_);
    } else if (c == ')' || c == ']' || c == '}') {
      if (brackets_.empty()) {
        fail(src_, pos_, std::string("unmatched '") + c + "'");
      }
      const char open = src_[brackets_.back()];
      const char expected = open == '(' ? ')' : open == '[' ? ']' : '}';
      if (c != expected) {
        fail(src_, pos_,
             std::string("closing parenthesis '") + c +
                 "' does not match opening parenthesis '" + open + "'");
      }
      brackets_.pop_back();
    }
    push(RawKind::op, pos_, pos_ + 1);
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  bool at_line_start_ = true;
  std::vector<std::size_t> indents_;
  std::vector<std::size_t> brackets_;
  std::vector<RawToken> tokens_;
};

}  // namespace codedenoise::python

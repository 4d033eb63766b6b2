#pragma once

#include <cstddef>
#include <initializer_list>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "codedenoise/kernel/python_lexer.hpp"

namespace codedenoise::python {

// How a name token is used. Drives identifier extraction.
enum class NameRole : unsigned char {
  none,              // not a name token
  reference,         // load of a name
  binding,           // store to a name in a function or module scope
  class_binding,     // store directly in a class body (reachable as attribute)
  import_binding,    // bound by an import statement
  attribute,         // the NAME after '.'
  keyword_argument,  // the NAME in f(name=value)
};

struct Node {
  std::string_view kind;
  std::size_t token = npos;  // raw token index for leaves
  std::vector<Node> children{};

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct ParseResult {
  std::vector<RawToken> tokens;
  std::vector<NameRole> roles;  // parallel to tokens
  std::set<std::string, std::less<>> fstring_names;
  Node root;
};

class Parser {
 public:
  explicit Parser(std::string_view source) : src_(source) {}

  ParseResult run() {
    result_.tokens = Lexer(src_).run();
    result_.roles.assign(result_.tokens.size(), NameRole::none);
    scopes_.assign(1, Scope::module);
    Node module{"Module"};
    while (peek().kind != RawKind::end_marker) {
      if (peek().kind == RawKind::newline) {
        ++pos_;
        continue;
      }
      module.children.push_back(statement());
    }
    result_.root = std::move(module);
    return std::move(result_);
  }

 private:
  enum class Scope { module, function, class_body, comprehension };

  // ---- token helpers ----------------------------------------------------

  const RawToken& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, result_.tokens.size() - 1);
    return result_.tokens[i];
  }

  bool at_op(std::string_view op, std::size_t ahead = 0) const {
    const RawToken& t = peek(ahead);
    return t.kind == RawKind::op && t.text == op;
  }

  bool at_kw(std::string_view kw, std::size_t ahead = 0) const {
    const RawToken& t = peek(ahead);
    return t.kind == RawKind::name && t.text == kw;
  }

  bool at_name(std::size_t ahead = 0) const {
    const RawToken& t = peek(ahead);
    return t.kind == RawKind::name && !is_keyword(t.text);
  }

  [[noreturn]] void error(const std::string& message) const {
    const RawToken& t = peek();
    std::string detail = message;
    if (t.kind == RawKind::end_marker) {
      detail += " (unexpected end of input)";
    } else if (t.kind == RawKind::indent) {
      detail = "unexpected indent";
    } else if (!t.text.empty() && t.kind != RawKind::newline) {
      detail += " near '" + std::string(t.text) + "'";
    }
    fail(src_, t.begin, detail);
  }

  void expect_op(std::string_view op) {
    if (!at_op(op)) error("expected '" + std::string(op) + "'");
    ++pos_;
  }

  void expect_kw(std::string_view kw) {
    if (!at_kw(kw)) error("expected '" + std::string(kw) + "'");
    ++pos_;
  }

  Node leaf(std::string_view kind) { return Node{kind, pos_++, {}}; }

  Node name_leaf(NameRole role) {
    if (!at_name()) error("expected a name");
    result_.roles[pos_] = role;
    return leaf("Name");
  }

  NameRole store_role() const {
    return scopes_.back() == Scope::class_body ? NameRole::class_binding
                                               : NameRole::binding;
  }

  bool starts_expression() const {
    const RawToken& t = peek();
    switch (t.kind) {
      case RawKind::name:
        return !is_keyword(t.text) || t.text == "not" || t.text == "lambda" ||
               t.text == "await" || t.text == "None" || t.text == "True" ||
               t.text == "False";
      case RawKind::number:
      case RawKind::string:
        return true;
      case RawKind::op:
        return t.text == "(" || t.text == "[" || t.text == "{" ||
               t.text == "-" || t.text == "+" || t.text == "~" ||
               t.text == "*" || t.text == "...";
      default:
        return false;
    }
  }

  // Marks every name in an assignment target as bound.
  void mark_target(const Node& target) {
    if (target.kind == "Name") {
      result_.roles[target.token] = store_role();
    } else if (target.kind == "Tuple" || target.kind == "List" ||
               target.kind == "Group" || target.kind == "Starred") {
      for (const Node& child : target.children) mark_target(child);
    } else if (target.kind == "Attribute" || target.kind == "Subscript") {
      // Stores into an object; no name is bound.
    } else {
      fail(src_, result_.tokens[first_token(target)].begin,
           "cannot assign to expression");
    }
  }

  static std::size_t first_token(const Node& node) {
    if (node.token != Node::npos) return node.token;
    for (const Node& child : node.children) {
      const std::size_t t = first_token(child);
      if (t != Node::npos) return t;
    }
    return Node::npos;
  }

  // ---- statements -------------------------------------------------------

  Node statement() {
    if (at_kw("def") || at_kw("class") || at_kw("if") || at_kw("while") ||
        at_kw("for") || at_kw("try") || at_kw("with") || at_kw("async") ||
        at_op("@")) {
      return compound_statement();
    }
    return simple_statements();
  }

  Node simple_statements() {
    Node line{"Line"};
    for (;;) {
      line.children.push_back(small_statement());
      if (at_op(";")) {
        ++pos_;
        if (peek().kind == RawKind::newline) break;
        continue;
      }
      break;
    }
    if (peek().kind != RawKind::newline) error("invalid syntax");
    ++pos_;
    return line;
  }

  Node small_statement() {
    if (at_kw("pass") || at_kw("break") || at_kw("continue")) {
      return leaf("Keyword");
    }
    if (at_kw("return")) {
      Node node{"Return", pos_++};
      if (starts_expression()) node.children.push_back(testlist_star_expr());
      return node;
    }
    if (at_kw("raise")) {
      Node node{"Raise", pos_++};
      if (starts_expression()) {
        node.children.push_back(test());
        if (at_kw("from")) {
          ++pos_;
          node.children.push_back(test());
        }
      }
      return node;
    }
    if (at_kw("global") || at_kw("nonlocal")) {
      Node node{"Global", pos_++};
      node.children.push_back(name_leaf(NameRole::reference));
      while (at_op(",")) {
        ++pos_;
        node.children.push_back(name_leaf(NameRole::reference));
      }
      return node;
    }
    if (at_kw("del")) {
      Node node{"Delete", pos_++};
      node.children.push_back(expression_list());
      return node;
    }
    if (at_kw("assert")) {
      Node node{"Assert", pos_++};
      node.children.push_back(test());
      if (at_op(",")) {
        ++pos_;
        node.children.push_back(test());
      }
      return node;
    }
    if (at_kw("yield")) {
      Node node{"Expr"};
      node.children.push_back(yield_expression());
      return node;
    }
    if (at_kw("import")) return import_name();
    if (at_kw("from")) return import_from();
    return expression_statement();
  }

  Node dotted_name(NameRole first_role) {
    Node node{"Dotted"};
    node.children.push_back(name_leaf(first_role));
    while (at_op(".")) {
      ++pos_;
      node.children.push_back(name_leaf(NameRole::attribute));
    }
    return node;
  }

  Node import_name() {
    Node node{"Import", pos_++};
    for (;;) {
      Node alias{"Alias"};
      const bool has_as = [&] {
        std::size_t i = 0;
        while (peek(i).kind == RawKind::name || at_op(".", i)) {
          if (at_kw("as", i)) return true;
          ++i;
        }
        return false;
      }();
      alias.children.push_back(dotted_name(
          has_as ? NameRole::attribute : NameRole::import_binding));
      if (at_kw("as")) {
        ++pos_;
        alias.children.push_back(name_leaf(NameRole::import_binding));
      }
      node.children.push_back(std::move(alias));
      if (!at_op(",")) break;
      ++pos_;
    }
    return node;
  }

  Node import_from() {
    Node node{"ImportFrom", pos_++};
    bool has_module = false;
    while (at_op(".") || at_op("...")) node.children.push_back(leaf("Dot"));
    if (at_name()) {
      node.children.push_back(dotted_name(NameRole::attribute));
      has_module = true;
    }
    if (!has_module && node.children.empty()) error("expected module name");
    expect_kw("import");
    if (at_op("*")) {
      node.children.push_back(leaf("Star"));
      return node;
    }
    const bool parenthesized = at_op("(");
    if (parenthesized) ++pos_;
    for (;;) {
      Node alias{"Alias"};
      if (at_kw("as", 1)) {
        alias.children.push_back(name_leaf(NameRole::attribute));
        ++pos_;
      }
      alias.children.push_back(name_leaf(NameRole::import_binding));
      node.children.push_back(std::move(alias));
      if (!at_op(",")) break;
      ++pos_;
      if (parenthesized && at_op(")")) break;
    }
    if (parenthesized) expect_op(")");
    return node;
  }

  static bool is_augmented(std::string_view op) {
    static constexpr std::string_view ops[] = {"+=",  "-=", "*=",  "/=",
                                               "//=", "%=", "**=", ">>=",
                                               "<<=", "&=", "|=",  "^=",
                                               "@="};
    for (std::string_view candidate : ops) {
      if (candidate == op) return true;
    }
    return false;
  }

  Node expression_statement() {
    Node first = testlist_star_expr();
    if (at_op(":")) {
      ++pos_;
      if (first.kind != "Name" && first.kind != "Attribute" &&
          first.kind != "Subscript" && first.kind != "Group") {
        error("illegal target for annotation");
      }
      mark_target(first);
      Node node{"AnnAssign"};
      node.children.push_back(std::move(first));
      node.children.push_back(test());
      if (at_op("=")) {
        ++pos_;
        node.children.push_back(at_kw("yield") ? yield_expression()
                                               : testlist_star_expr());
      }
      return node;
    }
    if (peek().kind == RawKind::op && is_augmented(peek().text)) {
      if (first.kind != "Name" && first.kind != "Attribute" &&
          first.kind != "Subscript") {
        error("illegal expression for augmented assignment");
      }
      mark_target(first);
      Node node{"AugAssign", pos_++};
      node.children.push_back(std::move(first));
      node.children.push_back(at_kw("yield") ? yield_expression()
                                             : testlist_star_expr());
      return node;
    }
    if (at_op("=")) {
      Node node{"Assign"};
      node.children.push_back(std::move(first));
      while (at_op("=")) {
        ++pos_;
        node.children.push_back(at_kw("yield") ? yield_expression()
                                               : testlist_star_expr());
      }
      for (std::size_t i = 0; i + 1 < node.children.size(); ++i) {
        mark_target(node.children[i]);
      }
      return node;
    }
    Node node{"Expr"};
    node.children.push_back(std::move(first));
    return node;
  }

  Node suite() {
    if (peek().kind != RawKind::newline) return simple_statements();
    ++pos_;
    if (peek().kind != RawKind::indent) error("expected an indented block");
    ++pos_;
    Node block{"Block"};
    while (peek().kind != RawKind::dedent) {
      if (peek().kind == RawKind::end_marker) error("expected dedent");
      if (peek().kind == RawKind::newline) {
        ++pos_;
        continue;
      }
      block.children.push_back(statement());
    }
    ++pos_;
    return block;
  }

  Node compound_statement() {
    if (at_op("@")) {
      Node node{"Decorated"};
      while (at_op("@")) {
        ++pos_;
        node.children.push_back(named_expression());
        if (peek().kind != RawKind::newline) error("invalid decorator");
        ++pos_;
      }
      if (at_kw("async")) ++pos_;
      if (at_kw("def")) {
        node.children.push_back(function_def());
      } else if (at_kw("class")) {
        node.children.push_back(class_def());
      } else {
        error("expected function or class after decorator");
      }
      return node;
    }
    if (at_kw("async")) {
      ++pos_;
      if (at_kw("def")) return function_def();
      if (at_kw("with")) return with_statement();
      if (at_kw("for")) return for_statement();
      error("invalid syntax");
    }
    if (at_kw("def")) return function_def();
    if (at_kw("class")) return class_def();
    if (at_kw("if")) return if_statement();
    if (at_kw("while")) {
      Node node{"While", pos_++};
      node.children.push_back(named_expression());
      expect_op(":");
      node.children.push_back(suite());
      else_clause(node);
      return node;
    }
    if (at_kw("for")) return for_statement();
    if (at_kw("try")) return try_statement();
    return with_statement();
  }

  void else_clause(Node& node) {
    if (at_kw("else")) {
      ++pos_;
      expect_op(":");
      node.children.push_back(suite());
    }
  }

  Node if_statement() {
    Node node{"If", pos_++};
    node.children.push_back(named_expression());
    expect_op(":");
    node.children.push_back(suite());
    while (at_kw("elif")) {
      Node elif{"Elif", pos_++};
      elif.children.push_back(named_expression());
      expect_op(":");
      elif.children.push_back(suite());
      node.children.push_back(std::move(elif));
    }
    else_clause(node);
    return node;
  }

  Node for_statement() {
    Node node{"For", pos_++};
    Node target = expression_list();
    mark_target(target);
    node.children.push_back(std::move(target));
    expect_kw("in");
    node.children.push_back(testlist_star_expr());
    expect_op(":");
    node.children.push_back(suite());
    else_clause(node);
    return node;
  }

  Node try_statement() {
    Node node{"Try", pos_++};
    expect_op(":");
    node.children.push_back(suite());
    bool handlers = false;
    while (at_kw("except")) {
      handlers = true;
      Node handler{"Except", pos_++};
      if (at_op("*")) ++pos_;
      if (!at_op(":")) {
        handler.children.push_back(test());
        if (at_kw("as")) {
          ++pos_;
          handler.children.push_back(name_leaf(store_role()));
        }
      }
      expect_op(":");
      handler.children.push_back(suite());
      node.children.push_back(std::move(handler));
    }
    if (handlers) else_clause(node);
    if (at_kw("finally")) {
      Node fin{"Finally", pos_++};
      expect_op(":");
      fin.children.push_back(suite());
      node.children.push_back(std::move(fin));
    } else if (!handlers) {
      error("expected 'except' or 'finally' block");
    }
    return node;
  }

  Node with_statement() {
    Node node{"With"};
    expect_kw("with");
    for (;;) {
      Node item{"WithItem"};
      item.children.push_back(test());
      if (at_kw("as")) {
        ++pos_;
        Node target = expression();
        mark_target(target);
        item.children.push_back(std::move(target));
      }
      node.children.push_back(std::move(item));
      if (!at_op(",")) break;
      ++pos_;
    }
    expect_op(":");
    node.children.push_back(suite());
    return node;
  }

  Node function_def() {
    Node node{"FunctionDef"};
    expect_kw("def");
    node.children.push_back(name_leaf(store_role()));
    scopes_.push_back(Scope::function);
    expect_op("(");
    node.children.push_back(parameters(")", true));
    expect_op(")");
    if (at_op("->")) {
      ++pos_;
      node.children.push_back(test());
    }
    expect_op(":");
    node.children.push_back(suite());
    scopes_.pop_back();
    return node;
  }

  Node class_def() {
    Node node{"ClassDef"};
    expect_kw("class");
    node.children.push_back(name_leaf(store_role()));
    if (at_op("(")) {
      ++pos_;
      if (!at_op(")")) node.children.push_back(arguments());
      expect_op(")");
    }
    expect_op(":");
    scopes_.push_back(Scope::class_body);
    node.children.push_back(suite());
    scopes_.pop_back();
    return node;
  }

  // Parameter list up to (not including) `close`. Caller pushes the scope.
  Node parameters(std::string_view close, bool annotations) {
    Node node{"Parameters"};
    while (!at_op(close)) {
      if (at_op("/")) {
        node.children.push_back(leaf("Slash"));
      } else if (at_op("*") || at_op("**")) {
        Node star{"StarParam", pos_++};
        if (at_name()) star.children.push_back(parameter(annotations));
        node.children.push_back(std::move(star));
      } else {
        Node param = parameter(annotations);
        if (at_op("=")) {
          ++pos_;
          param.children.push_back(test());
        }
        node.children.push_back(std::move(param));
      }
      if (!at_op(",")) break;
      ++pos_;
    }
    return node;
  }

  Node parameter(bool annotations) {
    Node node{"Param"};
    node.children.push_back(name_leaf(NameRole::binding));
    if (annotations && at_op(":")) {
      ++pos_;
      node.children.push_back(test());
    }
    return node;
  }

  // ---- expressions ------------------------------------------------------

  Node yield_expression() {
    Node node{"Yield", pos_++};
    if (at_kw("from")) {
      ++pos_;
      node.children.push_back(test());
    } else if (starts_expression()) {
      node.children.push_back(testlist_star_expr());
    }
    return node;
  }

  Node star_or_test() {
    if (at_op("*")) {
      Node node{"Starred", pos_++};
      node.children.push_back(expression());
      return node;
    }
    return test();
  }

  Node testlist_star_expr() {
    Node first = star_or_test();
    if (!at_op(",")) return first;
    Node tuple{"Tuple"};
    tuple.children.push_back(std::move(first));
    while (at_op(",")) {
      ++pos_;
      if (!starts_expression()) break;
      tuple.children.push_back(star_or_test());
    }
    return tuple;
  }

  // Targets of for/del: bitwise-or level so that `in` is not consumed.
  Node expression_list() {
    auto one = [&] {
      if (at_op("*")) {
        Node node{"Starred", pos_++};
        node.children.push_back(expression());
        return node;
      }
      return expression();
    };
    Node first = one();
    if (!at_op(",")) return first;
    Node tuple{"Tuple"};
    tuple.children.push_back(std::move(first));
    while (at_op(",")) {
      ++pos_;
      if (!starts_expression()) break;
      tuple.children.push_back(one());
    }
    return tuple;
  }

  Node named_expression() {
    if (at_name() && at_op(":=", 1)) {
      Node node{"NamedExpr"};
      node.children.push_back(name_leaf(NameRole::binding));
      ++pos_;
      node.children.push_back(test());
      return node;
    }
    return test();
  }

  Node test() {
    if (at_kw("lambda")) return lambda();
    Node body = or_test();
    if (!at_kw("if")) return body;
    Node node{"IfExp", pos_++};
    node.children.push_back(std::move(body));
    node.children.push_back(or_test());
    expect_kw("else");
    node.children.push_back(test());
    return node;
  }

  Node lambda() {
    Node node{"Lambda", pos_++};
    scopes_.push_back(Scope::function);
    node.children.push_back(parameters(":", false));
    expect_op(":");
    node.children.push_back(test());
    scopes_.pop_back();
    return node;
  }

  Node or_test() {
    Node left = and_test();
    while (at_kw("or")) {
      Node node{"Or", pos_++};
      node.children.push_back(std::move(left));
      node.children.push_back(and_test());
      left = std::move(node);
    }
    return left;
  }

  Node and_test() {
    Node left = not_test();
    while (at_kw("and")) {
      Node node{"And", pos_++};
      node.children.push_back(std::move(left));
      node.children.push_back(not_test());
      left = std::move(node);
    }
    return left;
  }

  Node not_test() {
    if (at_kw("not")) {
      Node node{"Not", pos_++};
      node.children.push_back(not_test());
      return node;
    }
    return comparison();
  }

  bool at_comparison() const {
    static constexpr std::string_view ops[] = {"<",  ">",  "==",
                                               ">=", "<=", "!="};
    const RawToken& t = peek();
    if (t.kind == RawKind::op) {
      for (std::string_view op : ops) {
        if (t.text == op) return true;
      }
      return false;
    }
    return at_kw("in") || at_kw("is") || (at_kw("not") && at_kw("in", 1));
  }

  Node comparison() {
    Node left = expression();
    if (!at_comparison()) return left;
    Node node{"Compare"};
    node.children.push_back(std::move(left));
    while (at_comparison()) {
      Node op{"CmpOp", pos_++};
      if (result_.tokens[op.token].text == "not" ||
          (result_.tokens[op.token].text == "is" && at_kw("not"))) {
        op.children.push_back(leaf("CmpOp"));
      }
      node.children.push_back(std::move(op));
      node.children.push_back(expression());
    }
    return node;
  }

  template <typename Next>
  Node binary(std::initializer_list<std::string_view> ops, Next next) {
    Node left = (this->*next)();
    for (;;) {
      bool matched = false;
      for (std::string_view op : ops) {
        if (at_op(op)) {
          matched = true;
          break;
        }
      }
      if (!matched) return left;
      Node node{"BinOp", pos_++};
      node.children.push_back(std::move(left));
      node.children.push_back((this->*next)());
      left = std::move(node);
    }
  }

  Node expression() { return binary({"|"}, &Parser::xor_expr); }
  Node xor_expr() { return binary({"^"}, &Parser::and_expr); }
  Node and_expr() { return binary({"&"}, &Parser::shift_expr); }
  Node shift_expr() { return binary({"<<", ">>"}, &Parser::arith_expr); }
  Node arith_expr() { return binary({"+", "-"}, &Parser::term); }
  Node term() { return binary({"*", "/", "%", "//", "@"}, &Parser::factor); }

  Node factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      Node node{"UnaryOp", pos_++};
      node.children.push_back(factor());
      return node;
    }
    return power();
  }

  Node power() {
    Node base = await_primary();
    if (!at_op("**")) return base;
    Node node{"BinOp", pos_++};
    node.children.push_back(std::move(base));
    node.children.push_back(factor());
    return node;
  }

  Node await_primary() {
    if (at_kw("await")) {
      Node node{"Await", pos_++};
      node.children.push_back(primary());
      return node;
    }
    return primary();
  }

  Node primary() {
    Node value = atom();
    for (;;) {
      if (at_op("(")) {
        Node call{"Call"};
        ++pos_;
        call.children.push_back(std::move(value));
        if (!at_op(")")) call.children.push_back(arguments());
        expect_op(")");
        value = std::move(call);
      } else if (at_op("[")) {
        Node sub{"Subscript"};
        ++pos_;
        sub.children.push_back(std::move(value));
        sub.children.push_back(subscripts());
        expect_op("]");
        value = std::move(sub);
      } else if (at_op(".")) {
        Node attr{"Attribute"};
        ++pos_;
        attr.children.push_back(std::move(value));
        attr.children.push_back(name_leaf(NameRole::attribute));
        value = std::move(attr);
      } else {
        return value;
      }
    }
  }

  Node subscripts() {
    Node node{"Subscripts"};
    for (;;) {
      node.children.push_back(subscript());
      if (!at_op(",")) break;
      ++pos_;
      if (at_op("]")) break;
    }
    return node;
  }

  Node subscript() {
    if (at_op("*")) return star_or_test();
    Node node{"Slice"};
    if (!at_op(":")) {
      Node lower = named_expression();
      if (!at_op(":")) return lower;
      node.children.push_back(std::move(lower));
    }
    node.children.push_back(leaf("Colon"));
    if (!at_op("]") && !at_op(",") && !at_op(":")) {
      node.children.push_back(test());
    }
    if (at_op(":")) {
      node.children.push_back(leaf("Colon"));
      if (!at_op("]") && !at_op(",")) node.children.push_back(test());
    }
    return node;
  }

  Node arguments() {
    Node node{"Arguments"};
    while (!at_op(")")) {
      if (at_op("*") || at_op("**")) {
        Node star{"StarArg", pos_++};
        star.children.push_back(test());
        node.children.push_back(std::move(star));
      } else if (at_name() && at_op("=", 1)) {
        Node keyword{"Keyword"};
        keyword.children.push_back(name_leaf(NameRole::keyword_argument));
        ++pos_;
        keyword.children.push_back(test());
        node.children.push_back(std::move(keyword));
      } else {
        Node arg = named_expression();
        if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
          Node gen{"GeneratorExp"};
          gen.children.push_back(std::move(arg));
          comprehension_clauses(gen);
          arg = std::move(gen);
        }
        node.children.push_back(std::move(arg));
      }
      if (!at_op(",")) break;
      ++pos_;
    }
    return node;
  }

  // Appends for/if clauses; the element was already parsed by the caller.
  void comprehension_clauses(Node& node) {
    scopes_.push_back(Scope::comprehension);
    while (at_kw("for") || at_kw("async")) {
      if (at_kw("async")) ++pos_;
      Node clause{"CompFor", pos_};
      expect_kw("for");
      Node target = expression_list();
      mark_target(target);
      clause.children.push_back(std::move(target));
      expect_kw("in");
      clause.children.push_back(or_test());
      while (at_kw("if")) {
        Node cond{"CompIf", pos_++};
        cond.children.push_back(or_test());
        clause.children.push_back(std::move(cond));
      }
      node.children.push_back(std::move(clause));
    }
    scopes_.pop_back();
  }

  bool at_comprehension() const {
    return at_kw("for") || (at_kw("async") && at_kw("for", 1));
  }

  Node sequence(std::string_view kind, std::string_view comp_kind,
                std::string_view close) {
    Node first = at_op("*") ? star_or_test() : named_expression();
    if (at_comprehension()) {
      Node node{comp_kind};
      node.children.push_back(std::move(first));
      comprehension_clauses(node);
      return node;
    }
    Node node{kind};
    node.children.push_back(std::move(first));
    while (at_op(",")) {
      ++pos_;
      if (at_op(close)) break;
      node.children.push_back(at_op("*") ? star_or_test() : named_expression());
    }
    return node;
  }

  Node atom() {
    const RawToken& t = peek();
    if (t.kind == RawKind::op) {
      if (t.text == "(") {
        ++pos_;
        if (at_op(")")) {
          ++pos_;
          return Node{"Tuple"};
        }
        Node inner;
        if (at_kw("yield")) {
          inner = Node{"Group"};
          inner.children.push_back(yield_expression());
        } else {
          inner = sequence("Tuple", "GeneratorExp", ")");
          if (inner.kind == "Tuple" && inner.children.size() == 1 &&
              result_.tokens[pos_ - 1].text != ",") {
            Node group{"Group"};
            group.children.push_back(std::move(inner.children.front()));
            inner = std::move(group);
          }
        }
        expect_op(")");
        return inner;
      }
      if (t.text == "[") {
        ++pos_;
        Node node = at_op("]") ? Node{"List"} : sequence("List", "ListComp", "]");
        expect_op("]");
        return node;
      }
      if (t.text == "{") {
        ++pos_;
        Node node = braces();
        expect_op("}");
        return node;
      }
      if (t.text == "...") return leaf("Ellipsis");
      error("invalid syntax");
    }
    if (t.kind == RawKind::number) return leaf("Number");
    if (t.kind == RawKind::string) {
      Node node{"Str"};
      while (peek().kind == RawKind::string) {
        if (peek().fstring) collect_fstring_names(peek().text);
        node.children.push_back(leaf("String"));
      }
      return node;
    }
    if (t.kind == RawKind::name) {
      if (t.text == "None" || t.text == "True" || t.text == "False") {
        return leaf("Constant");
      }
      if (!is_keyword(t.text)) return name_leaf(NameRole::reference);
    }
    error("invalid syntax");
  }

  Node braces() {
    if (at_op("}")) return Node{"Dict"};
    auto dict_item = [&]() {
      Node item{"DictItem"};
      if (at_op("**")) {
        item.children.push_back(leaf("DoubleStar"));
        item.children.push_back(expression());
        return item;
      }
      item.children.push_back(test());
      expect_op(":");
      item.children.push_back(test());
      return item;
    };
    const bool is_dict =
        at_op("**") || [&] {
          // Scan ahead at depth 0 for ':' before ',' / '}' / 'for'.
          int depth = 0;
          for (std::size_t i = 0;; ++i) {
            const RawToken& t = peek(i);
            if (t.kind == RawKind::end_marker) return false;
            if (t.kind == RawKind::op) {
              if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
              if (t.text == ")" || t.text == "]" || t.text == "}") {
                if (depth == 0) return false;
                --depth;
              }
              if (depth == 0 && t.text == ",") return false;
              if (depth == 0 && t.text == ":") return true;
            }
            if (depth == 0 && t.kind == RawKind::name &&
                (t.text == "for" || t.text == "lambda")) {
              return false;
            }
          }
        }();
    if (!is_dict) return sequence("Set", "SetComp", "}");
    Node first = dict_item();
    if (at_comprehension()) {
      Node node{"DictComp"};
      node.children.push_back(std::move(first));
      comprehension_clauses(node);
      return node;
    }
    Node node{"Dict"};
    node.children.push_back(std::move(first));
    while (at_op(",")) {
      ++pos_;
      if (at_op("}")) break;
      node.children.push_back(dict_item());
    }
    return node;
  }

  // Names referenced inside {...} of an f-string. Renaming these would
  // require rewriting the literal, so extraction treats them as fixed.
  void collect_fstring_names(std::string_view text) {
    int depth = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if (c == '{') {
        if (depth == 0 && i + 1 < text.size() && text[i + 1] == '{') {
          ++i;
          continue;
        }
        ++depth;
      } else if (c == '}') {
        if (depth > 0) --depth;
      } else if (depth > 0 && is_name_start(c) &&
                 (i == 0 || !is_name_char(text[i - 1]))) {
        std::size_t j = i;
        while (j < text.size() && is_name_char(text[j])) ++j;
        result_.fstring_names.emplace(text.substr(i, j - i));
        i = j - 1;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::vector<Scope> scopes_;
  ParseResult result_;
};

inline ParseResult parse(std::string_view source) {
  return Parser(source).run();
}

}  // namespace codedenoise::python

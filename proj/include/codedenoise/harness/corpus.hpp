#pragma once

#include <cstddef>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "codedenoise/error.hpp"
#include "codedenoise/kernel/grammar.hpp"
#include "codedenoise/model/labeled_snippet.hpp"

namespace codedenoise {

struct Corpus {
  std::string split;  // train | validate | test
  std::vector<LabeledSnippet> records;

  std::size_t size() const { return records.size(); }

  std::size_t class_count() const {
    std::size_t c = 0;
    for (const auto& r : records) c = std::max(c, r.label + 1);
    return c;
  }

  // Throws validation on duplicate ids or labels >= classes.
  void validate(std::size_t classes) const {
    std::set<std::string_view> ids;
    for (const auto& r : records) {
      if (!ids.insert(r.id).second) {
        throw Error(ErrorKind::validation, "duplicate record id '" + r.id + "'");
      }
      if (r.label >= classes) {
        throw Error(ErrorKind::validation, "record '" + r.id + "' label " +
                                               std::to_string(r.label) + " out of range");
      }
    }
  }

  std::vector<std::string> sources() const {
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.code.source());
    return out;
  }
};

inline nlohmann::json record_to_json(const LabeledSnippet& r) {
  return nlohmann::json{{"id", r.id},
                        {"code", r.code.source()},
                        {"label", r.label},
                        {"language", to_string(r.code.language())}};
}

// Parses one corpus line. Syntax errors propagate with the record id.
inline LabeledSnippet record_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("id") || !j.contains("code") ||
      !j.contains("label")) {
    throw Error(ErrorKind::validation, "corpus record needs id, code and label");
  }
  const std::string id = j["id"].get<std::string>();
  const long long label = j["label"].get<long long>();
  if (label < 0) throw Error(ErrorKind::validation, "negative label in '" + id + "'");
  const Grammar& grammar = grammar_for(j.value("language", std::string("python")));
  try {
    return LabeledSnippet{id, CodeSnippet::parse(j["code"].get<std::string>(), grammar.language),
                          static_cast<std::size_t>(label)};
  } catch (const SyntaxError& e) {
    throw SyntaxError("record '" + id + "': " + e.message(), e.offset(), e.line(),
                      e.column());
  }
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& r : corpus.records) out << record_to_json(r).dump() << '\n';
}

inline Corpus read_corpus(std::istream& in, std::string split) {
  Corpus corpus{std::move(split), {}};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorKind::validation, "corpus line " + std::to_string(number) +
                                             " is not a JSON object");
    }
    corpus.records.push_back(record_from_json(j));
  }
  return corpus;
}

inline Corpus load_corpus(const std::string& path, std::string split) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::usage, "cannot open corpus " + path);
  return read_corpus(in, std::move(split));
}

inline void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::usage, "cannot write " + path);
  write_corpus(out, corpus);
}

}  // namespace codedenoise

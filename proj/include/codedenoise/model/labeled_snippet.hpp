#pragma once

#include <cstddef>
#include <string>

#include "codedenoise/kernel/code_snippet.hpp"

namespace codedenoise {

struct LabeledSnippet {
  std::string id;
  CodeSnippet code;
  std::size_t label = 0;
};

}  // namespace codedenoise

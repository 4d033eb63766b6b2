#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "codedenoise/cleanser/cleanser.hpp"
#include "codedenoise/detector/deepgini.hpp"
#include "codedenoise/detector/smoothing.hpp"
#include "codedenoise/error.hpp"

namespace codedenoise {

enum class DetectorKind { smoothing, deepgini, none };
enum class LocalizerKind { attention, random };
enum class BackendKind { toy, subprocess };

struct PipelineConfig {
  DetectorKind detector = DetectorKind::smoothing;
  SmoothingConfig smoothing;  // seed is filled in per input
  GiniConfig gini;
  LocalizerKind localizer = LocalizerKind::attention;
  CleanseConfig cleanse;      // seed is filled in per input
  BackendKind backend = BackendKind::toy;
  std::string backend_command;
  std::size_t repetitions = 5;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const {
    smoothing.validate();
    gini.validate();
    if (repetitions < 1) throw Error(ErrorKind::validation, "repetitions must be >= 1");
    if (workers < 1) throw Error(ErrorKind::validation, "workers must be >= 1");
    if (backend == BackendKind::subprocess && backend_command.empty()) {
      throw Error(ErrorKind::validation, "backend.command is required for subprocess");
    }
  }
};

inline std::string_view to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::smoothing: return "smoothing";
    case DetectorKind::deepgini: return "deepgini";
    case DetectorKind::none: return "none";
  }
  return "?";
}

inline std::string_view to_string(LocalizerKind k) {
  return k == LocalizerKind::attention ? "attention" : "random";
}

inline std::string_view to_string(BackendKind k) {
  return k == BackendKind::toy ? "toy" : "subprocess";
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw Error(ErrorKind::validation, key + ": expected a non-negative integer, got '" + value + "'");
  }
  return v;
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw Error(ErrorKind::validation, key + ": expected a number, got '" + value + "'");
  }
  return v;
}

}  // namespace detail

// Applies one key. Unknown keys and bad values raise validation errors.
inline void apply_setting(PipelineConfig& config, const std::string& key,
                          const std::string& value) {
  using detail::parse_double;
  using detail::parse_unsigned;
  if (key == "detector.kind") {
    if (value == "smoothing") config.detector = DetectorKind::smoothing;
    else if (value == "deepgini") config.detector = DetectorKind::deepgini;
    else if (value == "none") config.detector = DetectorKind::none;
    else throw Error(ErrorKind::validation, "detector.kind: unknown '" + value + "'");
  } else if (key == "detector.theta") {
    config.smoothing.theta = parse_unsigned(key, value);
  } else if (key == "detector.n_multiplier") {
    config.smoothing.multiplier = parse_unsigned(key, value);
  } else if (key == "detector.zeta") {
    config.gini.zeta = parse_double(key, value);
  } else if (key == "localizer.kind") {
    if (value == "attention") config.localizer = LocalizerKind::attention;
    else if (value == "random") config.localizer = LocalizerKind::random;
    else throw Error(ErrorKind::validation, "localizer.kind: unknown '" + value + "'");
  } else if (key == "cleanser.strategy") {
    config.cleanse.strategy = parse_cleanse_strategy(value);
  } else if (key == "backend.kind") {
    if (value == "toy") config.backend = BackendKind::toy;
    else if (value == "subprocess") config.backend = BackendKind::subprocess;
    else throw Error(ErrorKind::validation, "backend.kind: unknown '" + value + "'");
  } else if (key == "backend.command") {
    config.backend_command = value;
  } else if (key == "repetitions") {
    config.repetitions = parse_unsigned(key, value);
  } else if (key == "seed") {
    config.seed = parse_unsigned(key, value);
  } else if (key == "workers") {
    config.workers = parse_unsigned(key, value);
  } else {
    throw Error(ErrorKind::validation, "unknown config key '" + key + "'");
  }
}

// Flat "key = value" lines; '#' starts a comment line.
inline PipelineConfig parse_config(std::string_view text) {
  PipelineConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::validation,
                  "config line " + std::to_string(number) + ": expected key = value");
    }
    apply_setting(config, detail::trim(std::string_view(trimmed).substr(0, eq)),
                  detail::trim(std::string_view(trimmed).substr(eq + 1)));
  }
  config.validate();
  return config;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::usage, "cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace codedenoise

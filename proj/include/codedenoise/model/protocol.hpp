#pragma once

// Line-delimited JSON protocol for out-of-process backends.
//
// The backend is a child process. Its first stdout line is the handshake
//   {"protocol": 1, "capabilities": ["classify", "attention", "mask_fill"]}
// after which it answers one request line with one response line:
//   -> {"id": 7, "op": "classify", "code": "...", "language": "python"}
//   <- {"id": 7, "ok": true, "probabilities": [0.1, 0.9]}
//   <- {"id": 8, "ok": true, "weights": [[...]], "token_spans": [[0, 3], ...]}
//   <- {"id": 9, "ok": true, "identifier": "count"}
//   <- {"id": 10, "ok": false, "error": "unsupported"}

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "codedenoise/error.hpp"
#include "codedenoise/kernel/grammar.hpp"
#include "codedenoise/model/backend.hpp"

namespace codedenoise::protocol {

inline constexpr int version = 1;
inline constexpr std::string_view unsupported = "unsupported";
inline constexpr std::string_view no_candidate = "no-candidate";

inline nlohmann::json handshake(const std::vector<std::string>& capabilities) {
  return nlohmann::json{{"protocol", version}, {"capabilities", capabilities}};
}

inline nlohmann::json error_response(const nlohmann::json& id,
                                     std::string_view message) {
  return nlohmann::json{{"id", id}, {"ok", false}, {"error", message}};
}

// Answers one request with the given models. Either model may be null, in
// which case the corresponding ops report "unsupported".
inline nlohmann::json handle_request(const nlohmann::json& request,
                                     const ClassifierBackend* classifier,
                                     const MaskFiller* filler) {
  const nlohmann::json id = request.contains("id") ? request["id"] : nullptr;
  if (!request.is_object() || !request.contains("op") ||
      !request["op"].is_string()) {
    return error_response(id, "malformed request");
  }
  const std::string op = request["op"].get<std::string>();
  if (op != "classify" && op != "attention" && op != "mask_fill") {
    return error_response(id, unsupported);
  }
  if (!request.contains("code") || !request["code"].is_string()) {
    return error_response(id, "missing code");
  }
  try {
    const std::string language = request.value("language", "python");
    const CodeSnippet snippet = CodeSnippet::parse(
        request["code"].get<std::string>(), grammar_for(language).language);
    nlohmann::json out{{"id", id}, {"ok", true}};
    if (op == "classify") {
      if (classifier == nullptr) return error_response(id, unsupported);
      out["probabilities"] = classifier->classify(snippet).probabilities();
    } else if (op == "attention") {
      if (classifier == nullptr || !classifier->supports_attention()) {
        return error_response(id, unsupported);
      }
      out["weights"] = classifier->attention_weights(snippet).weights;
      nlohmann::json spans = nlohmann::json::array();
      for (const Token& t : snippet.tokens()) {
        spans.push_back({t.span.begin, t.span.end});
      }
      out["token_spans"] = std::move(spans);
    } else {
      if (filler == nullptr) return error_response(id, unsupported);
      auto positions = sentinel_positions(snippet);
      if (positions.empty()) return error_response(id, "no mask in code");
      MaskedSnippet masked{snippet, std::string(default_mask_sentinel),
                           std::string(default_mask_sentinel), snippet,
                           std::move(positions)};
      out["identifier"] = filler->mask_fill(masked);
    }
    return out;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::no_candidate) {
      return error_response(id, no_candidate);
    }
    return error_response(id, e.what());
  }
}

// Runs the server side of the protocol until `in` is exhausted.
inline void serve(std::istream& in, std::ostream& out,
                  const ClassifierBackend* classifier,
                  const MaskFiller* filler) {
  std::vector<std::string> caps;
  if (classifier != nullptr) caps.emplace_back("classify");
  if (classifier != nullptr && classifier->supports_attention()) {
    caps.emplace_back("attention");
  }
  if (filler != nullptr) caps.emplace_back("mask_fill");
  out << handshake(caps).dump() << '\n' << std::flush;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json request = nlohmann::json::parse(line, nullptr, false);
    nlohmann::json response =
        request.is_discarded() ? error_response(nullptr, "malformed request")
                               : handle_request(request, classifier, filler);
    out << response.dump() << '\n' << std::flush;
  }
}

// Client: spawns `command` under /bin/sh and speaks the protocol over its
// stdin/stdout. Calls are serialized internally; the backend reports itself
// as not concurrent-safe so callers do not fan out.
class SubprocessBackend : public ClassifierBackend, public MaskFiller {
 public:
  explicit SubprocessBackend(const std::string& command,
                             Language language = Language::python)
      : language_(language) {
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
      throw Error(ErrorKind::transport, "pipe: " + std::string(std::strerror(errno)));
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      throw Error(ErrorKind::transport, "fork: " + std::string(std::strerror(errno)));
    }
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    ::fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(read_fd_, F_SETFD, FD_CLOEXEC);

    const nlohmann::json hello = read_json();
    if (!hello.is_object() || hello.value("protocol", 0) != version ||
        !hello.contains("capabilities") || !hello["capabilities"].is_array()) {
      throw Error(ErrorKind::protocol, "bad handshake: " + hello.dump());
    }
    for (const auto& cap : hello["capabilities"]) {
      if (cap.is_string()) capabilities_.push_back(cap.get<std::string>());
    }
  }

  SubprocessBackend(const SubprocessBackend&) = delete;
  SubprocessBackend& operator=(const SubprocessBackend&) = delete;

  ~SubprocessBackend() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      for (int i = 0; i < 100; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }

  const std::vector<std::string>& capabilities() const { return capabilities_; }

  bool has_capability(std::string_view cap) const {
    for (const auto& c : capabilities_) {
      if (c == cap) return true;
    }
    return false;
  }

  Prediction classify(const CodeSnippet& snippet) const override {
    const nlohmann::json r = call("classify", snippet.source());
    if (!r.contains("probabilities") || !r["probabilities"].is_array()) {
      throw Error(ErrorKind::protocol, "classify response lacks probabilities");
    }
    std::vector<double> p;
    for (const auto& v : r["probabilities"]) {
      if (!v.is_number()) throw Error(ErrorKind::protocol, "non-numeric probability");
      p.push_back(v.get<double>());
    }
    return Prediction(std::move(p));
  }

  bool supports_attention() const override { return has_capability("attention"); }

  AttentionMap attention_weights(const CodeSnippet& snippet) const override {
    const nlohmann::json r = call("attention", snippet.source());
    if (!r.contains("weights") || !r.contains("token_spans")) {
      throw Error(ErrorKind::protocol, "attention response lacks weights/spans");
    }
    std::vector<std::vector<double>> weights;
    std::vector<Span> spans;
    try {
      weights = r["weights"].get<std::vector<std::vector<double>>>();
      for (const auto& s : r["token_spans"]) {
        spans.push_back(Span{s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::protocol, std::string("attention response: ") + e.what());
    }
    return align_subtokens(weights, spans, snippet.tokens());
  }

  std::string mask_fill(const MaskedSnippet& masked) const override {
    const nlohmann::json r = call("mask_fill", masked.text.source());
    if (!r.contains("identifier") || !r["identifier"].is_string()) {
      throw Error(ErrorKind::protocol, "mask_fill response lacks identifier");
    }
    std::string name = r["identifier"].get<std::string>();
    if (!grammar_for(language_).is_legal_identifier(name)) {
      throw Error(ErrorKind::protocol, "backend proposed illegal identifier '" + name + "'");
    }
    return name;
  }

  bool concurrent_safe() const override { return false; }

  // Sends a raw request object; used by conformance tests for unknown ops.
  nlohmann::json raw_call(nlohmann::json request) const {
    std::lock_guard lock(mutex_);
    request["id"] = next_id_++;
    write_line(request.dump());
    return read_json();
  }

 private:
  nlohmann::json call(std::string_view op, const std::string& code) const {
    std::lock_guard lock(mutex_);
    const std::int64_t id = next_id_++;
    write_line(nlohmann::json{{"id", id},
                              {"op", op},
                              {"code", code},
                              {"language", to_string(language_)}}
                   .dump());
    nlohmann::json r = read_json();
    if (!r.is_object() || !r.contains("id") || r["id"] != id) {
      throw Error(ErrorKind::protocol, "response id mismatch: " + r.dump());
    }
    if (!r.contains("ok") || !r["ok"].is_boolean()) {
      throw Error(ErrorKind::protocol, "response lacks ok flag");
    }
    if (!r["ok"].get<bool>()) {
      const std::string message = r.value("error", std::string("unknown error"));
      if (message == unsupported) {
        throw Error(ErrorKind::capability, "backend does not support " + std::string(op));
      }
      if (message == no_candidate) {
        throw Error(ErrorKind::no_candidate, "backend has no candidate");
      }
      throw Error(ErrorKind::transport, "backend error: " + message);
    }
    return r;
  }

  void write_line(const std::string& line) const {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(write_fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorKind::transport,
                    "write to backend failed: " + std::string(std::strerror(errno)));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  nlohmann::json read_json() const {
    std::string line;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        break;
      }
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw Error(ErrorKind::transport, "backend closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorKind::protocol, "backend sent malformed line: " + line);
    }
    return j;
  }

  Language language_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::vector<std::string> capabilities_;
  mutable std::mutex mutex_;
  mutable std::int64_t next_id_ = 1;
  mutable std::string buffer_;
};

}  // namespace codedenoise::protocol

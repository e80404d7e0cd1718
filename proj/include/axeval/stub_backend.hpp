#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "axeval/gateway.hpp"

namespace axeval {

using StubMatcher = std::function<bool(const ChatRequest&)>;
using StubResponder = std::function<BackendReply(const ChatRequest&)>;

/// One scripted rule: requests whose user message contains `contains`
/// receive `responses` in order; the last response repeats once the
/// sequence is used up.
struct StubScriptEntry {
  std::string contains;
  std::vector<BackendReply> responses;
};

/// Offline ChatBackend that replays scripted responses. Rules are tried in
/// registration order and the first match wins. A request that matches no
/// rule (and finds no fallback) gets a NoScript reply.
class StubBackend : public ChatBackend {
 public:
  void stub_register(const std::vector<StubScriptEntry>& script);
  void on_substring(std::string needle, std::vector<BackendReply> responses);
  void on(StubMatcher matcher, std::vector<BackendReply> responses,
          std::string description = "custom matcher");
  void on(StubMatcher matcher, StubResponder responder,
          std::string description = "custom responder");
  void set_fallback(StubResponder responder);

  /// Sleeps this long inside every call; lets tests observe concurrency.
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

  BackendReply send(const ChatRequest& request) override;

  std::size_t call_count() const { return calls_.load(); }
  std::size_t max_in_flight() const { return max_in_flight_.load(); }
  std::vector<ChatRequest> requests() const;

  /// {"rules": [{"contains": "...", "responses": ["text", {"status": 429},
  /// {"timeout": true}, {"missing_content": true}]}], "synthetic_fallback": bool}
  void load_script(const nlohmann::json& script);

 private:
  struct Rule {
    std::string description;
    StubMatcher matcher;
    std::vector<BackendReply> sequence;
    StubResponder responder;
    std::size_t next = 0;
  };

  mutable std::mutex mutex_;
  std::vector<Rule> rules_;
  StubResponder fallback_;
  std::vector<ChatRequest> log_;
  std::chrono::milliseconds latency_{0};
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
};

/// Deterministic stand-in model for the built-in prompt set: recognizes
/// each prompt kind from its instruction text and answers in the expected
/// format. Output is a pure function of (user message, run index).
BackendReply synthetic_reply(const ChatRequest& request);

}  // namespace axeval

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "axeval/prompts.hpp"

namespace axeval {

class ResponseCache;

/// One chat-completion deployment. `temperature` unset means "backend
/// default" and is recorded as such in manifests and cache keys.
struct ModelConfig {
  std::string backend_id = "default";
  std::string endpoint_url = "http://localhost:8000/v1/chat/completions";
  std::string model_name;
  std::optional<double> temperature;
  int max_tokens = 256;
  std::chrono::milliseconds timeout{60000};
  std::string system_message;

  /// Throws std::invalid_argument on a malformed URL, max_tokens <= 0,
  /// negative temperature or an empty model name.
  void validate() const;
};

void to_json(nlohmann::json& out, const ModelConfig& config);
void from_json(const nlohmann::json& in, ModelConfig& config);

struct CompletionRequest {
  RenderedPrompt prompt;
  ModelConfig model;
  int run_index = 1;
};

struct CompletionResult {
  std::string raw_text;  // verbatim, untrimmed
  std::chrono::milliseconds latency{0};
  int attempt_count = 1;
  bool from_cache = false;
};

/// What a backend sees: the rendered prompt as a single user message.
struct ChatRequest {
  std::string backend_id;
  std::string endpoint_url;
  std::string model_name;
  std::string system_message;
  std::string user_message;
  std::optional<double> temperature;
  int max_tokens = 256;
  std::chrono::milliseconds timeout{60000};
  int run_index = 1;
};

struct BackendReply {
  enum class Kind { Ok, HttpError, Timeout, ConnectionError, MissingContent, NoScript };
  Kind kind = Kind::Ok;
  int http_status = 200;
  std::string text;    // completion text when kind == Ok
  std::string detail;  // diagnostics otherwise

  static BackendReply ok(std::string text) { return {Kind::Ok, 200, std::move(text), {}}; }
  static BackendReply http_error(int status, std::string detail = {}) {
    return {Kind::HttpError, status, {}, std::move(detail)};
  }
  static BackendReply timeout() { return {Kind::Timeout, 0, {}, "timed out"}; }
};

/// Transport to one chat-completion backend. Implementations must be safe
/// to call from several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendReply send(const ChatRequest& request) = 0;
};

class GatewayError : public std::runtime_error {
 public:
  enum class Kind { ExhaustedRetries, NonRetryable, MissingContent, NoScript };
  GatewayError(Kind kind, int attempts, const std::string& what)
      : std::runtime_error(what), kind_(kind), attempts_(attempts) {}
  Kind kind() const { return kind_; }
  int attempts() const { return attempts_; }

 private:
  Kind kind_;
  int attempts_;
};

std::string_view to_string(GatewayError::Kind kind);

/// Exponential backoff: attempt k (1-based) that fails waits
/// min(initial_delay * multiplier^(k-1), max_delay) before attempt k+1.
struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{20000};

  std::chrono::milliseconds delay_after(int attempt) const;
};

/// 429, 408 and 5xx are transient; other 4xx are not.
bool is_retryable_status(int status);

struct GatewayOptions {
  RetryPolicy retry;
  std::size_t max_in_flight = 4;
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to sleep_for
};

struct GatewayStats {
  std::size_t backend_calls = 0;  // attempts that reached the backend
  std::size_t cache_hits = 0;
  std::size_t completions = 0;    // successful complete() results
};

/// Retrying, concurrency-limited, optionally cached access to one backend.
/// Share one Gateway per backend; the in-flight limit is enforced per
/// instance.
class Gateway {
 public:
  Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options = {},
          std::shared_ptr<ResponseCache> cache = nullptr);

  CompletionResult complete(const CompletionRequest& request);

  /// Cache lookup keyed on (model, prompt text, temperature, run index);
  /// a miss calls complete() and persists the raw text before returning.
  CompletionResult cached_complete(const CompletionRequest& request);

  /// Drops the cache slot for `request` so the next cached_complete
  /// draws a fresh sample.
  void invalidate(const CompletionRequest& request);

  GatewayStats stats() const;
  const std::shared_ptr<ResponseCache>& cache() const { return cache_; }

 private:
  class InFlightSlot;

  std::shared_ptr<ChatBackend> backend_;
  GatewayOptions options_;
  std::shared_ptr<ResponseCache> cache_;

  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  std::size_t in_flight_ = 0;

  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> completions_{0};
};

/// Reads AXEVAL_API_KEY_<BACKEND_ID> (backend id upper-cased, other
/// characters mapped to '_').
std::optional<std::string> api_key_for(std::string_view backend_id);
std::string api_key_variable(std::string_view backend_id);

}  // namespace axeval

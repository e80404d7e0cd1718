#include "axeval/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <thread>

#include <nlohmann/json.hpp>

#include "axeval/cache.hpp"

namespace axeval {

using nlohmann::json;

void ModelConfig::validate() const {
  const auto scheme_end = endpoint_url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint_url '" + endpoint_url + "' has no scheme");
  }
  const std::string scheme = endpoint_url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw std::invalid_argument("endpoint_url scheme must be http or https: " +
                                endpoint_url);
  }
  const std::string rest = endpoint_url.substr(scheme_end + 3);
  const std::string host = rest.substr(0, rest.find_first_of("/:?#"));
  if (host.empty() || host.find_first_of(" \t") != std::string::npos) {
    throw std::invalid_argument("endpoint_url has no host: " + endpoint_url);
  }
  if (model_name.empty()) throw std::invalid_argument("model_name must be set");
  if (backend_id.empty()) throw std::invalid_argument("backend_id must be set");
  if (max_tokens <= 0) throw std::invalid_argument("max_tokens must be positive");
  if (temperature && !(*temperature >= 0.0)) {
    throw std::invalid_argument("temperature must be >= 0");
  }
  if (timeout.count() <= 0) throw std::invalid_argument("timeout must be positive");
}

void to_json(json& out, const ModelConfig& config) {
  out = json{{"backend_id", config.backend_id},
             {"endpoint_url", config.endpoint_url},
             {"model_name", config.model_name},
             {"temperature", config.temperature ? json(*config.temperature) : json()},
             {"max_tokens", config.max_tokens},
             {"timeout_ms", config.timeout.count()},
             {"system_message", config.system_message}};
}

void from_json(const json& in, ModelConfig& config) {
  ModelConfig defaults;
  config.backend_id = in.value("backend_id", defaults.backend_id);
  config.endpoint_url = in.value("endpoint_url", defaults.endpoint_url);
  config.model_name = in.value("model_name", defaults.model_name);
  if (auto it = in.find("temperature"); it != in.end() && !it->is_null()) {
    config.temperature = it->get<double>();
  } else {
    config.temperature.reset();
  }
  config.max_tokens = in.value("max_tokens", defaults.max_tokens);
  config.timeout = std::chrono::milliseconds(
      in.value("timeout_ms", static_cast<long long>(defaults.timeout.count())));
  config.system_message = in.value("system_message", defaults.system_message);
}

std::string_view to_string(GatewayError::Kind kind) {
  switch (kind) {
    case GatewayError::Kind::ExhaustedRetries:
      return "ExhaustedRetries";
    case GatewayError::Kind::NonRetryable:
      return "NonRetryable";
    case GatewayError::Kind::MissingContent:
      return "MissingContent";
    case GatewayError::Kind::NoScript:
      return "NoScript";
  }
  return "NonRetryable";
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
  const double scaled =
      static_cast<double>(initial_delay.count()) * std::pow(multiplier, attempt - 1);
  const double capped = std::min(scaled, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

bool is_retryable_status(int status) {
  return status == 429 || status == 408 || (status >= 500 && status <= 599);
}

std::string api_key_variable(std::string_view backend_id) {
  std::string name = "AXEVAL_API_KEY_";
  for (char c : backend_id) {
    name.push_back(std::isalnum(static_cast<unsigned char>(c))
                       ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                       : '_');
  }
  return name;
}

std::optional<std::string> api_key_for(std::string_view backend_id) {
  const char* value = std::getenv(api_key_variable(backend_id).c_str());
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

// RAII hold on one of the gateway's in-flight slots.
class Gateway::InFlightSlot {
 public:
  explicit InFlightSlot(Gateway& gateway) : gateway_(gateway) {
    std::unique_lock lock(gateway_.slots_mutex_);
    gateway_.slots_cv_.wait(lock, [&] {
      return gateway_.in_flight_ < gateway_.options_.max_in_flight;
    });
    ++gateway_.in_flight_;
  }
  ~InFlightSlot() {
    {
      std::lock_guard lock(gateway_.slots_mutex_);
      --gateway_.in_flight_;
    }
    gateway_.slots_cv_.notify_one();
  }
  InFlightSlot(const InFlightSlot&) = delete;
  InFlightSlot& operator=(const InFlightSlot&) = delete;

 private:
  Gateway& gateway_;
};

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options,
                 std::shared_ptr<ResponseCache> cache)
    : backend_(std::move(backend)), options_(std::move(options)), cache_(std::move(cache)) {
  if (!backend_) throw std::invalid_argument("Gateway needs a backend");
  if (options_.max_in_flight == 0) throw std::invalid_argument("max_in_flight must be >= 1");
  if (options_.retry.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

CompletionResult Gateway::complete(const CompletionRequest& request) {
  ChatRequest chat;
  chat.backend_id = request.model.backend_id;
  chat.endpoint_url = request.model.endpoint_url;
  chat.model_name = request.model.model_name;
  chat.system_message = request.model.system_message;
  chat.user_message = request.prompt.text;
  chat.temperature = request.model.temperature;
  chat.max_tokens = request.model.max_tokens;
  chat.timeout = request.model.timeout;
  chat.run_index = request.run_index;

  const auto started = std::chrono::steady_clock::now();
  const int max_attempts = options_.retry.max_attempts;
  for (int attempt = 1;; ++attempt) {
    BackendReply reply;
    {
      InFlightSlot slot(*this);
      ++backend_calls_;
      reply = backend_->send(chat);
    }
    std::string failure;
    switch (reply.kind) {
      case BackendReply::Kind::Ok: {
        ++completions_;
        CompletionResult result;
        result.raw_text = std::move(reply.text);
        result.attempt_count = attempt;
        result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);
        return result;
      }
      case BackendReply::Kind::MissingContent:
        throw GatewayError(GatewayError::Kind::MissingContent, attempt,
                           "response has no text content: " + reply.detail);
      case BackendReply::Kind::NoScript:
        throw GatewayError(GatewayError::Kind::NoScript, attempt,
                           "no stub script matches the request: " + reply.detail);
      case BackendReply::Kind::HttpError:
        if (!is_retryable_status(reply.http_status)) {
          throw GatewayError(GatewayError::Kind::NonRetryable, attempt,
                             "HTTP " + std::to_string(reply.http_status) + ": " +
                                 reply.detail);
        }
        failure = "HTTP " + std::to_string(reply.http_status);
        break;
      case BackendReply::Kind::Timeout:
        failure = "timeout";
        break;
      case BackendReply::Kind::ConnectionError:
        failure = "connection error: " + reply.detail;
        break;
    }
    if (attempt >= max_attempts) {
      throw GatewayError(GatewayError::Kind::ExhaustedRetries, attempt,
                         "gave up after " + std::to_string(attempt) +
                             " attempts (last: " + failure + ")");
    }
    options_.sleep(options_.retry.delay_after(attempt));
  }
}

namespace {
std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}
}  // namespace

CompletionResult Gateway::cached_complete(const CompletionRequest& request) {
  if (!cache_) return complete(request);
  const std::string key = ResponseCache::key_for(request);
  if (auto hit = cache_->lookup(key)) {
    ++cache_hits_;
    CompletionResult result;
    result.raw_text = std::move(hit->raw_text);
    result.from_cache = true;
    return result;
  }
  CompletionResult result = complete(request);
  cache_->store({key, request.prompt.slot_digest, result.raw_text, utc_timestamp(),
                 request.model.model_name});
  return result;
}

void Gateway::invalidate(const CompletionRequest& request) {
  if (cache_) cache_->erase(ResponseCache::key_for(request));
}

GatewayStats Gateway::stats() const {
  return {backend_calls_.load(), cache_hits_.load(), completions_.load()};
}

}  // namespace axeval

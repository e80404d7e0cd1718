#pragma once

#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "axeval/gateway.hpp"

namespace axeval {

/// Maps ChatRequest to a request body and a response body back to text.
/// The default speaks the OpenAI chat-completion shape with a single user
/// message (plus a system message when one is configured).
struct WireAdapter {
  std::function<nlohmann::json(const ChatRequest&)> encode;
  std::function<std::optional<std::string>(const nlohmann::json&)> decode;

  static WireAdapter openai_chat();
};

/// POSTs to the configured endpoint with cpp-httplib. Credentials come from
/// AXEVAL_API_KEY_<BACKEND_ID> as a bearer token.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(WireAdapter adapter = WireAdapter::openai_chat());
  BackendReply send(const ChatRequest& request) override;

 private:
  WireAdapter adapter_;
};

}  // namespace axeval

#include "axeval/http_backend.hpp"

#include <httplib.h>

namespace axeval {

using nlohmann::json;

WireAdapter WireAdapter::openai_chat() {
  WireAdapter adapter;
  adapter.encode = [](const ChatRequest& request) {
    json messages = json::array();
    if (!request.system_message.empty()) {
      messages.push_back({{"role", "system"}, {"content", request.system_message}});
    }
    messages.push_back({{"role", "user"}, {"content", request.user_message}});
    json body = {{"model", request.model_name},
                 {"messages", std::move(messages)},
                 {"max_tokens", request.max_tokens}};
    if (request.temperature) body["temperature"] = *request.temperature;
    return body;
  };
  adapter.decode = [](const json& body) -> std::optional<std::string> {
    const auto choices = body.find("choices");
    if (choices == body.end() || !choices->is_array() || choices->empty()) return std::nullopt;
    const auto& first = choices->front();
    if (auto message = first.find("message"); message != first.end() && message->is_object()) {
      if (auto content = message->find("content");
          content != message->end() && content->is_string()) {
        return content->get<std::string>();
      }
    }
    if (auto text = first.find("text"); text != first.end() && text->is_string()) {
      return text->get<std::string>();
    }
    return std::nullopt;
  };
  return adapter;
}

HttpBackend::HttpBackend(WireAdapter adapter) : adapter_(std::move(adapter)) {}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start =
      scheme_end == std::string::npos ? std::string::npos : url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

BackendReply HttpBackend::send(const ChatRequest& request) {
  const SplitUrl url = split_url(request.endpoint_url);
  httplib::Client client(url.origin);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
      request.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  httplib::Headers headers;
  if (auto key = api_key_for(request.backend_id)) {
    headers.emplace("Authorization", "Bearer " + *key);
  }
  const std::string body = adapter_.encode(request).dump();
  auto response = client.Post(url.path, headers, body, "application/json");
  if (!response) {
    const auto error = response.error();
    if (error == httplib::Error::Read || error == httplib::Error::Write ||
        error == httplib::Error::ConnectionTimeout) {
      return BackendReply::timeout();
    }
    BackendReply reply;
    reply.kind = BackendReply::Kind::ConnectionError;
    reply.http_status = 0;
    reply.detail = httplib::to_string(error);
    return reply;
  }
  if (response->status < 200 || response->status >= 300) {
    return BackendReply::http_error(response->status, response->body.substr(0, 500));
  }
  json parsed = json::parse(response->body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) {
    return {BackendReply::Kind::MissingContent, response->status, {}, "body is not JSON"};
  }
  auto text = adapter_.decode(parsed);
  if (!text) {
    return {BackendReply::Kind::MissingContent, response->status, {},
            response->body.substr(0, 500)};
  }
  return BackendReply::ok(std::move(*text));
}

}  // namespace axeval

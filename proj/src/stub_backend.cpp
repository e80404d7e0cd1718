#include "axeval/stub_backend.hpp"

#include <algorithm>
#include <array>
#include <thread>

#include <nlohmann/json.hpp>

#include "axeval/text.hpp"

namespace axeval {

using nlohmann::json;

void StubBackend::stub_register(const std::vector<StubScriptEntry>& script) {
  for (const auto& entry : script) on_substring(entry.contains, entry.responses);
}

void StubBackend::on_substring(std::string needle, std::vector<BackendReply> responses) {
  std::string description = "contains \"" + needle + "\"";
  on([needle = std::move(needle)](const ChatRequest& r) {
       return r.user_message.find(needle) != std::string::npos;
     },
     std::move(responses), std::move(description));
}

void StubBackend::on(StubMatcher matcher, std::vector<BackendReply> responses,
                     std::string description) {
  if (responses.empty()) throw std::invalid_argument("stub rule needs at least one response");
  std::lock_guard lock(mutex_);
  rules_.push_back({std::move(description), std::move(matcher), std::move(responses), {}, 0});
}

void StubBackend::on(StubMatcher matcher, StubResponder responder, std::string description) {
  std::lock_guard lock(mutex_);
  rules_.push_back({std::move(description), std::move(matcher), {}, std::move(responder), 0});
}

void StubBackend::set_fallback(StubResponder responder) {
  std::lock_guard lock(mutex_);
  fallback_ = std::move(responder);
}

BackendReply StubBackend::send(const ChatRequest& request) {
  ++calls_;
  const std::size_t now = ++in_flight_;
  std::size_t seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  struct Leave {
    std::atomic<std::size_t>& counter;
    ~Leave() { --counter; }
  } leave{in_flight_};

  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

  StubResponder responder;
  {
    std::lock_guard lock(mutex_);
    log_.push_back(request);
    for (auto& rule : rules_) {
      if (!rule.matcher(request)) continue;
      if (rule.responder) {
        responder = rule.responder;
        break;
      }
      const std::size_t index = std::min(rule.next, rule.sequence.size() - 1);
      ++rule.next;
      return rule.sequence[index];
    }
    if (!responder) responder = fallback_;
  }
  if (responder) return responder(request);
  BackendReply reply;
  reply.kind = BackendReply::Kind::NoScript;
  reply.detail = request.user_message.substr(0, 120);
  return reply;
}

std::vector<ChatRequest> StubBackend::requests() const {
  std::lock_guard lock(mutex_);
  return log_;
}

namespace {

BackendReply reply_from_json(const json& value) {
  if (value.is_string()) return BackendReply::ok(value.get<std::string>());
  if (!value.is_object()) throw std::invalid_argument("stub response must be string or object");
  if (value.contains("text")) return BackendReply::ok(value.at("text").get<std::string>());
  if (value.value("timeout", false)) return BackendReply::timeout();
  if (value.value("missing_content", false)) {
    return {BackendReply::Kind::MissingContent, 200, {}, "scripted missing content"};
  }
  if (value.contains("status")) {
    return BackendReply::http_error(value.at("status").get<int>(), "scripted failure");
  }
  throw std::invalid_argument("unrecognized stub response: " + value.dump());
}

}  // namespace

void StubBackend::load_script(const json& script) {
  std::vector<StubScriptEntry> entries;
  for (const auto& rule : script.value("rules", json::array())) {
    StubScriptEntry entry;
    entry.contains = rule.at("contains").get<std::string>();
    for (const auto& response : rule.at("responses")) {
      entry.responses.push_back(reply_from_json(response));
    }
    entries.push_back(std::move(entry));
  }
  stub_register(entries);
  if (script.value("synthetic_fallback", false)) set_fallback(synthetic_reply);
}

// --- synthetic model -------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 1469598103934665603ULL) {
  std::uint64_t hash = seed;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

// Value of the last line that starts with `label`.
std::string last_slot(std::string_view message, std::string_view label) {
  std::string value;
  std::size_t pos = 0;
  while (pos <= message.size()) {
    const std::size_t end = std::min(message.find('\n', pos), message.size());
    const std::string_view line = message.substr(pos, end - pos);
    if (line.substr(0, label.size()) == label) {
      value = std::string(text::trim(line.substr(label.size())));
    }
    pos = end + 1;
  }
  return value;
}

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

std::string strip_period(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

BackendReply synthetic_reply(const ChatRequest& request) {
  static constexpr std::array<std::string_view, 3> kLabels = {"Entailment", "Contradiction",
                                                              "Neutral"};
  static constexpr std::array<std::string_view, 5> kTypes = {
      "spatial", "temporal", "physical", "social", "intentional"};
  const std::string& message = request.user_message;
  const std::string hypothesis = strip_period(last_slot(message, "Hypothesis:"));
  const std::uint64_t item = fnv1a(hypothesis);
  const auto run = static_cast<std::uint64_t>(request.run_index);

  if (contains(message, "Type of commonsense knowledge:")) {
    // Roughly a quarter of the items drift between runs.
    const bool drifts = item % 4 == 0;
    const std::uint64_t variant = (item / 7 + (drifts ? run : 0)) % 3;
    std::string axiom;
    switch (variant) {
      case 0:
        axiom = "When a scene is described, details such as \"" + hypothesis +
                "\" must be stated or clearly implied to hold.";
        break;
      case 1:
        axiom = "People usually only do what a description reports, so \"" + hypothesis +
                "\" needs direct support from it.";
        break;
      default:
        axiom = "A situation cannot both include and exclude \"" + hypothesis +
                "\" at the same moment.";
        break;
    }
    return BackendReply::ok("Type of commonsense knowledge: " +
                            std::string(kTypes[item % kTypes.size()]) +
                            "\nCommonsense knowledge: " + axiom);
  }
  if (contains(message, "predict the textual entailment relationship")) {
    const std::uint64_t pick = fnv1a(last_slot(message, "Commonsense Knowledge:"), item) % 3;
    return BackendReply::ok(std::string(kLabels[pick]) +
                            ": The commonsense knowledge points this way.");
  }
  if (contains(message, "Format the response as:")) {
    const bool flips = fnv1a(hypothesis, run) % 5 == 0;
    const std::uint64_t pick = (item + (flips ? 1 : 0)) % 3;
    const std::uint64_t phrasing = (item / 3 + (flips ? run : 0)) % 2;
    std::string explanation =
        phrasing == 0 ? "The premise bears directly on whether \"" + hypothesis + "\" holds."
                      : "Whether \"" + hypothesis + "\" holds follows from the premise details.";
    return BackendReply::ok(std::string(kLabels[pick]) + ": " + explanation);
  }
  if (contains(message, "Rate how helpful")) {
    const std::uint64_t rating = 1 + fnv1a(last_slot(message, "Commonsense:")) % 10;
    return BackendReply::ok(std::to_string(rating) + ": The axiom relates to the pair.");
  }
  if (contains(message, "rate how similar")) {
    const std::string first = last_slot(message, "Commonsense1:");
    const std::string second = last_slot(message, "Commonsense2:");
    const std::uint64_t rating = first == second ? 10 : 1 + fnv1a(first + "|" + second) % 10;
    return BackendReply::ok(std::to_string(rating) + ": Similarity of the two statements.");
  }
  BackendReply reply;
  reply.kind = BackendReply::Kind::NoScript;
  reply.detail = "synthetic model does not recognize this prompt";
  return reply;
}

}  // namespace axeval

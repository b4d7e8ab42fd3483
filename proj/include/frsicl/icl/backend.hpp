#pragma once

// Chat-completion backends: an OpenAI-compatible HTTP(S) client and an
// in-process mock that answers from the step-prompt table.

#include <chrono>
#include <cstdlib>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "frsicl/csv.hpp"
#include "frsicl/icl/prompt.hpp"

namespace frsicl::icl {

inline constexpr const char* kApiKeyEnv = "FRSICL_API_KEY";

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  double temperature = 0.0;
  int max_tokens = 64;
};

struct ChatResponse {
  std::string raw;
  double latency_ms = 0.0;
  long prompt_tokens = -1;  // -1 when the backend does not report usage
  long completion_tokens = -1;
};

enum class BackendErrorKind { timeout, transport, http_status, malformed_body };

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  BackendErrorKind kind() const noexcept { return kind_; }

 private:
  BackendErrorKind kind_;
};

inline std::string_view to_string(BackendErrorKind k) {
  switch (k) {
    case BackendErrorKind::timeout: return "timeout";
    case BackendErrorKind::transport: return "transport";
    case BackendErrorKind::http_status: return "http-status";
    case BackendErrorKind::malformed_body: return "malformed-body";
  }
  return "unknown";
}

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Throws BackendError on any failed attempt.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// HTTP

inline nlohmann::json chat_request_body(const ChatRequest& r) {
  return {{"model", r.model},
          {"messages", nlohmann::json::array({{{"role", "system"}, {"content", r.system}},
                                              {{"role", "user"}, {"content", r.user}}})},
          {"temperature", r.temperature},
          {"max_tokens", r.max_tokens}};
}

/// choices[0].message.content of a chat-completions response body, verbatim.
inline ChatResponse extract_completion(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw BackendError(BackendErrorKind::malformed_body, "response body is not JSON");
  try {
    ChatResponse out;
    out.raw = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      out.prompt_tokens = j["usage"].value("prompt_tokens", -1L);
      out.completion_tokens = j["usage"].value("completion_tokens", -1L);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendErrorKind::malformed_body, std::string("unexpected response shape: ") + e.what());
  }
}

struct HttpSettings {
  std::string endpoint;  // scheme://host[:port][/base]
  std::string api_key;   // empty: no Authorization header
  double timeout_s = 10.0;
};

/// Splits "https://host:port/base" into ("https://host:port", "/base").
inline std::pair<std::string, std::string> split_endpoint(std::string endpoint) {
  while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw std::invalid_argument("endpoint must start with http:// or https://");
  const auto path = endpoint.find('/', scheme + 3);
  if (path == std::string::npos) return {endpoint, ""};
  return {endpoint.substr(0, path), endpoint.substr(path)};
}

/// POST <endpoint>/v1/chat/completions and return the first choice's content.
inline ChatResponse http_complete(const ChatRequest& request, const HttpSettings& settings) {
  const auto [origin, base] = split_endpoint(settings.endpoint);
  httplib::Client client(origin);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(settings.timeout_s));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!settings.api_key.empty()) headers.emplace("Authorization", "Bearer " + settings.api_key);

  const auto start = std::chrono::steady_clock::now();
  const auto res = client.Post(base + "/v1/chat/completions", headers, chat_request_body(request).dump(),
                               "application/json");
  const double latency =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (!res) {
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                           err == httplib::Error::ConnectionTimeout;
    throw BackendError(timed_out ? BackendErrorKind::timeout : BackendErrorKind::transport,
                       "request failed: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(BackendErrorKind::http_status, "HTTP status " + std::to_string(res->status));
  }
  ChatResponse out = extract_completion(res->body);
  out.latency_ms = latency;
  return out;
}

class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpSettings settings) : settings_(std::move(settings)) {}
  ChatResponse complete(const ChatRequest& request) override { return http_complete(request, settings_); }

 private:
  HttpSettings settings_;
};

// ---------------------------------------------------------------------------
// Mock

enum class MockStrategy { max_aoi, nearest, invalid };

struct PromptTableRow {
  std::size_t id = 0;
  double aoi_s = 0.0;
  double distance_m = 0.0;
  double path_loss_db = 0.0;
  bool eligible = false;
};

struct ParsedStepPrompt {
  std::vector<PromptTableRow> rows;
  double v_min = 0.0;
  double v_max = 0.0;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

/// Reads the sensor table and the velocity range back out of a step prompt.
inline ParsedStepPrompt parse_step_prompt(const std::string& prompt) {
  ParsedStepPrompt out;
  std::istringstream in(prompt);
  std::string line;
  bool in_table = false;
  while (std::getline(in, line)) {
    if (line == kTableHeader) {
      in_table = true;
      continue;
    }
    if (!in_table) continue;
    if (detail::trim(line).empty()) break;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const auto bar = line.find('|', pos);
      cells.push_back(detail::trim(std::string_view(line).substr(pos, bar == std::string::npos ? bar : bar - pos)));
      if (bar == std::string::npos) break;
      pos = bar + 1;
    }
    if (cells.size() != 5) throw std::invalid_argument("malformed sensor table row: " + line);
    PromptTableRow r;
    r.id = std::stoul(cells[0]);
    r.aoi_s = std::stod(cells[1]);
    r.distance_m = std::stod(cells[2]);
    r.path_loss_db = std::stod(cells[3]);
    r.eligible = cells[4] == "yes";
    out.rows.push_back(r);
  }
  const std::string marker = "\"velocity\": <number ";
  const auto at = prompt.rfind(marker);
  if (at != std::string::npos) {
    const auto end = prompt.find('>', at);
    const std::string range = prompt.substr(at + marker.size(), end - at - marker.size());
    const auto dots = range.find("..");
    out.v_min = std::stod(range.substr(0, dots));
    out.v_max = std::stod(range.substr(dots + 2));
  }
  return out;
}

inline std::string mock_complete(MockStrategy strategy, const std::string& step_prompt) {
  if (strategy == MockStrategy::invalid) {
    return "I would rather not pick a sensor right now; maybe sensor five at a moderate pace.";
  }
  const ParsedStepPrompt p = parse_step_prompt(step_prompt);
  bool any_eligible = false;
  for (const auto& r : p.rows) any_eligible = any_eligible || r.eligible;
  const PromptTableRow* best = nullptr;
  for (const auto& r : p.rows) {
    if (any_eligible && !r.eligible) continue;
    if (best == nullptr) {
      best = &r;
    } else if (strategy == MockStrategy::max_aoi ? r.aoi_s > best->aoi_s : r.distance_m < best->distance_m) {
      best = &r;
    }
  }
  const std::size_t id = best ? best->id : 1;
  return "{\"sensor\": " + std::to_string(id) + ", \"velocity\": " + format_number(p.v_max) + "}";
}

class MockChatBackend final : public ChatBackend {
 public:
  explicit MockChatBackend(MockStrategy strategy) : strategy_(strategy) {}
  ChatResponse complete(const ChatRequest& request) override {
    ChatResponse r;
    r.raw = mock_complete(strategy_, request.user);
    return r;
  }

 private:
  MockStrategy strategy_;
};

}  // namespace frsicl::icl

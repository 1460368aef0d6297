// SPDX-License-Identifier: Apache-2.0
#include <regex>
#include <thread>

#include <fmt/core.h>

#include "concord/model_client.hpp"
#include "httplib.h"

namespace concord {

OpenAICompatBackend::OpenAICompatBackend(OpenAIConfig config) : config_(std::move(config)) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url))
    throw Error(ErrorCode::config_error, fmt::format("bad endpoint URL '{}'", config_.endpoint));
  scheme_host_ = m[1];
  path_prefix_ = m[2].matched ? std::string(m[2]) : std::string();
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string OpenAICompatBackend::describe() const {
  return fmt::format("openai-compat:{} ({})", config_.endpoint, config_.model);
}

json OpenAICompatBackend::build_body(const ChatRequest& request) const {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back(m);
  json body{{"model", config_.model},
            {"messages", messages},
            {"temperature", request.temperature},
            {"max_tokens", request.max_output_tokens}};
  if (request.seed) body["seed"] = *request.seed;
  if (!request.tools.empty()) {
    json tools = json::array();
    for (const auto& t : request.tools)
      tools.push_back(json{{"type", "function"},
                           {"function", {{"name", t.name},
                                         {"description", t.description},
                                         {"parameters", t.parameters}}}});
    body["tools"] = tools;
  }
  return body;
}

ChatResponse OpenAICompatBackend::parse_body(const std::string& body) {
  try {
    auto j = json::parse(body);
    const auto& message = j.at("choices").at(0).at("message");
    ChatResponse r;
    if (message.contains("tool_calls") && message["tool_calls"].is_array() &&
        !message["tool_calls"].empty()) {
      const auto& fn = message["tool_calls"][0].at("function");
      const auto& args = fn.at("arguments");
      r.tool_call = ModelToolCall{fn.at("name").get<std::string>(),
                                  args.is_string() ? args.get<std::string>() : args.dump()};
    } else if (message.contains("content") && message["content"].is_string()) {
      r.text = message["content"].get<std::string>();
    } else {
      throw Error(ErrorCode::malformed_response, "choice has neither content nor tool call");
    }
    if (j.contains("usage") && j["usage"].is_object()) r.usage = j["usage"].get<Usage>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_response, e.what());
  }
}

ChatResponse OpenAICompatBackend::complete(const ChatRequest& request) {
  const auto body = build_body(request).dump();
  httplib::Headers headers{{"X-Request-Tag", request.request_tag}};
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto delay = config_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(
          static_cast<long>(static_cast<double>(delay.count()) * config_.backoff_factor));
    }
    httplib::Client client(scheme_host_);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(config_.timeout);
    auto res = client.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
    if (!res) {
      last_error = fmt::format("transport failure: {}", httplib::to_string(res.error()));
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = fmt::format("HTTP {}", res->status);
      continue;
    }
    if (res->status != 200)
      throw Error(ErrorCode::transport_error,
                  fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 300)));
    return parse_body(res->body);
  }
  throw Error(ErrorCode::transport_error,
              fmt::format("{} after {} retries", last_error, config_.max_retries));
}

}  // namespace concord

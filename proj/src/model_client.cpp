// SPDX-License-Identifier: Apache-2.0
#include "concord/model_client.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include <fmt/core.h>

namespace concord {

namespace {

std::string_view role_name(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role role_from(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "assistant") return Role::assistant;
  if (s == "user") return Role::user;
  throw Error(ErrorCode::invalid_argument, fmt::format("unknown role '{}'", s));
}

long ceil_quarter(std::size_t bytes) { return static_cast<long>((bytes + 3) / 4); }

ChatResponse response_from_script(const json& j) {
  ChatResponse r;
  if (j.contains("text")) r.text = j["text"].get<std::string>();
  if (j.contains("tool_call")) {
    const auto& tc = j["tool_call"];
    const auto& args = tc.at("arguments");
    r.tool_call = ModelToolCall{tc.at("name").get<std::string>(),
                                args.is_string() ? args.get<std::string>() : args.dump()};
  }
  if (j.contains("usage")) r.usage = j["usage"].get<Usage>();
  return r;
}

ErrorCode fault_from(std::string_view s) {
  if (s == "transport_error") return ErrorCode::transport_error;
  if (s == "malformed_response") return ErrorCode::malformed_response;
  throw Error(ErrorCode::config_error, fmt::format("unknown scripted fault '{}'", s));
}

}  // namespace

const ChatMessage* ChatRequest::last_user_message() const {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it)
    if (it->role == Role::user) return &*it;
  return nullptr;
}

void to_json(json& j, const ChatMessage& v) {
  j = json{{"role", role_name(v.role)}, {"content", v.content}};
}
void from_json(const json& j, ChatMessage& v) {
  v.role = role_from(j.at("role").get<std::string>());
  v.content = j.at("content").get<std::string>();
}

void to_json(json& j, const ChatRequest& v) {
  json tools = json::array();
  for (const auto& t : v.tools) tools.push_back(t.name);
  j = json{{"messages", v.messages},
           {"tools", tools},
           {"temperature", v.temperature},
           {"max_output_tokens", v.max_output_tokens},
           {"seed", v.seed ? json(*v.seed) : json(nullptr)}};
}

void to_json(json& j, const ChatResponse& v) {
  j = json::object();
  if (v.text) j["text"] = *v.text;
  if (v.tool_call) j["tool_call"] = json{{"name", v.tool_call->name}, {"arguments", v.tool_call->arguments}};
  j["usage"] = v.usage;
}
void from_json(const json& j, ChatResponse& v) { v = response_from_script(j); }

void validate_request(const ChatRequest& request) {
  if (request.messages.empty())
    throw Error(ErrorCode::invalid_argument, "chat request has no messages");
  auto first = request.messages.front().role;
  if (first != Role::system && first != Role::user)
    throw Error(ErrorCode::invalid_argument, "first message must be system or user");
  if (request.temperature < 0)
    throw Error(ErrorCode::invalid_argument, "temperature must be non-negative");
  if (request.max_output_tokens <= 0)
    throw Error(ErrorCode::invalid_argument, "max_output_tokens must be positive");
}

void validate_response(const ChatResponse& response) {
  if (response.text.has_value() == response.tool_call.has_value())
    throw Error(ErrorCode::malformed_response, "response must carry exactly one of text/tool_call");
  if (response.usage.prompt_tokens < 0 || response.usage.completion_tokens < 0)
    throw Error(ErrorCode::malformed_response, "negative token counts");
}

Usage estimate_usage(const ChatRequest& request, const ChatResponse& response) {
  std::size_t prompt = 0;
  for (const auto& m : request.messages) prompt += m.content.size();
  std::size_t completion = response.text ? response.text->size() : 0;
  if (response.tool_call)
    completion += response.tool_call->name.size() + response.tool_call->arguments.size();
  return Usage{ceil_quarter(prompt), std::max(1L, ceil_quarter(completion))};
}

// ---------------------------------------------------------------------------
// ScriptedBackend

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules, ChatResponse default_response)
    : rules_(std::move(rules)), default_response_(std::move(default_response)) {}

ScriptedBackend ScriptedBackend::from_json(const json& script) {
  ScriptedBackend backend;
  try {
    for (const auto& r : script.value("rules", json::array())) {
      ScriptRule rule;
      rule.source = r.dump();
      if (r.contains("tag")) rule.tag = std::regex(r["tag"].get<std::string>());
      if (r.contains("contains")) rule.contains = r["contains"].get<std::string>();
      if (r.contains("regex")) rule.pattern = std::regex(r["regex"].get<std::string>());
      if (r.contains("fault")) rule.fault = fault_from(r["fault"].get<std::string>());
      if (r.contains("response")) rule.response = response_from_script(r["response"]);
      rule.delay_ms = r.value("delay_ms", 0);
      backend.rules_.push_back(std::move(rule));
    }
    if (script.contains("default_response"))
      backend.default_response_ = response_from_script(script["default_response"]);
    else
      backend.default_response_ = text_response("");
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::config_error, fmt::format("bad regex in script: {}", e.what()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, fmt::format("bad script: {}", e.what()));
  }
  return backend;
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot open script {}", path));
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, fmt::format("{}: {}", path, e.what()));
  }
}

ScriptedBackend& ScriptedBackend::add(ScriptRule rule) {
  rules_.push_back(std::move(rule));
  return *this;
}

ScriptedBackend& ScriptedBackend::set_default(ChatResponse response) {
  default_response_ = std::move(response);
  return *this;
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  const auto* user = request.last_user_message();
  const std::string& last = user ? user->content : std::string();
  const ScriptRule* hit = nullptr;
  for (const auto& rule : rules_) {
    if (rule.tag && !std::regex_match(request.request_tag, *rule.tag)) continue;
    if (rule.contains && last.find(*rule.contains) == std::string::npos) continue;
    if (rule.pattern && !std::regex_search(last, *rule.pattern)) continue;
    hit = &rule;
    break;
  }
  if (hit && hit->delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(hit->delay_ms));
  if (hit && hit->fault)
    throw Error(*hit->fault, fmt::format("scripted fault for {}", request.request_tag));
  ChatResponse response = hit ? hit->response : default_response_;
  if (response.usage == Usage{}) response.usage = estimate_usage(request, response);
  return response;
}

ChatResponse text_response(std::string text) {
  ChatResponse r;
  r.text = std::move(text);
  return r;
}

ScriptRule rule_text(std::string tag_regex, std::string text) {
  ScriptRule rule;
  rule.source = tag_regex;
  rule.tag = std::regex(tag_regex);
  rule.response = text_response(std::move(text));
  return rule;
}

ScriptRule rule_tool(std::string tag_regex, std::string tool_name, json arguments) {
  ScriptRule rule;
  rule.source = tag_regex;
  rule.tag = std::regex(tag_regex);
  rule.response.tool_call = ModelToolCall{std::move(tool_name), arguments.dump()};
  return rule;
}

// ---------------------------------------------------------------------------
// ModelClient

ModelClient::ModelClient(std::shared_ptr<Backend> backend, long token_budget)
    : backend_(std::move(backend)), token_budget_(token_budget) {
  if (!backend_) throw Error(ErrorCode::invalid_argument, "model client needs a backend");
}

bool ModelClient::exhausted(const TraceBuffer& sink) const {
  if (token_budget_ <= 0) return false;
  std::lock_guard lock(mutex_);
  return committed_.total() + sink.usage().total() >= token_budget_;
}

ChatResponse ModelClient::complete(const ChatRequest& request, TraceBuffer& sink) {
  validate_request(request);
  sink.emit(EventKind::request, json{{"tag", request.request_tag},
                                     {"template", request.template_id},
                                     {"request", request}});
  auto record_error = [&](ErrorCode code, const std::string& message) {
    sink.emit(EventKind::response, json{{"tag", request.request_tag},
                                        {"error", to_string(code)},
                                        {"message", message}});
  };
  if (exhausted(sink)) {
    record_error(ErrorCode::budget_exceeded, "run token budget exhausted");
    throw Error(ErrorCode::budget_exceeded, fmt::format("token budget {} exhausted", token_budget_));
  }
  try {
    auto response = backend_->complete(request);
    validate_response(response);
    sink.add_usage(response.usage);
    sink.emit(EventKind::response, json{{"tag", request.request_tag},
                                        {"response", response},
                                        {"usage", response.usage}});
    return response;
  } catch (const Error& e) {
    record_error(e.code(), e.detail());
    throw;
  } catch (const std::exception& e) {
    record_error(ErrorCode::transport_error, e.what());
    throw Error(ErrorCode::transport_error, e.what());
  }
}

void ModelClient::commit(const Usage& usage) {
  std::lock_guard lock(mutex_);
  committed_ += usage;
}

Usage ModelClient::committed() const {
  std::lock_guard lock(mutex_);
  return committed_;
}

// ---------------------------------------------------------------------------

std::shared_ptr<Backend> make_backend(const std::string& spec) {
  auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw Error(ErrorCode::config_error, fmt::format("backend spec '{}' has no scheme", spec));
  auto scheme = spec.substr(0, colon);
  auto rest = spec.substr(colon + 1);
  if (scheme == "scripted") return std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(rest));
  if (scheme == "openai-compat") {
    OpenAIConfig cfg;
    auto q = rest.find("?model=");
    if (q != std::string::npos) {
      cfg.model = rest.substr(q + 7);
      rest = rest.substr(0, q);
    } else if (const char* m = std::getenv("CONCORD_MODEL")) {
      cfg.model = m;
    }
    if (cfg.model.empty())
      throw Error(ErrorCode::config_error, "openai-compat backend needs ?model= or CONCORD_MODEL");
    cfg.endpoint = rest;
    if (const char* k = std::getenv("CONCORD_API_KEY"))
      cfg.api_key = k;
    else if (const char* k2 = std::getenv("OPENAI_API_KEY"))
      cfg.api_key = k2;
    return std::make_shared<OpenAICompatBackend>(std::move(cfg));
  }
  throw Error(ErrorCode::config_error, fmt::format("unknown backend scheme '{}'", scheme));
}

}  // namespace concord

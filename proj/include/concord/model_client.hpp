// SPDX-License-Identifier: Apache-2.0
//
// Uniform access to language-model backends. A Backend answers one chat
// request; the ModelClient wraps it with validation, per-run token budget
// enforcement and trace recording, so every protocol shares one accounting
// point.
#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "concord/errors.hpp"
#include "concord/structured.hpp"
#include "concord/trace.hpp"

namespace concord {

enum class Role { system, user, assistant };

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ToolSchema {
  std::string name;
  std::string description;
  json parameters;  // JSON schema of the arguments object
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  std::vector<ToolSchema> tools;
  double temperature = 0.0;
  int max_output_tokens = 4096;
  std::optional<long> seed;
  std::string request_tag;
  std::string template_id;

  const ChatMessage* last_user_message() const;
};

struct ModelToolCall {
  std::string name;
  std::string arguments;  // JSON text

  bool operator==(const ModelToolCall&) const = default;
};

struct ChatResponse {
  std::optional<std::string> text;
  std::optional<ModelToolCall> tool_call;
  Usage usage;

  bool operator==(const ChatResponse&) const = default;
};

void to_json(json& j, const ChatMessage& v);
void from_json(const json& j, ChatMessage& v);
void to_json(json& j, const ChatRequest& v);
void to_json(json& j, const ChatResponse& v);
void from_json(const json& j, ChatResponse& v);

/// Throws InvalidArgument when the request breaks its invariants.
void validate_request(const ChatRequest& request);
/// Throws MalformedResponse when the response breaks its invariants.
void validate_response(const ChatResponse& response);

class Backend {
 public:
  virtual ~Backend() = default;

  /// Must be safe to call concurrently.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string describe() const = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend

struct ScriptRule {
  std::optional<std::regex> tag;       // full match against request_tag
  std::optional<std::string> contains; // substring of the last user message
  std::optional<std::regex> pattern;   // search within the last user message
  std::string source;                  // rule as written, for diagnostics
  ChatResponse response;
  std::optional<ErrorCode> fault;      // raise instead of responding
  int delay_ms = 0;
};

/// Deterministic rule table. The first rule whose matchers all hold answers
/// the request; otherwise the default response. Responses without explicit
/// usage get a byte-length estimate so token accounting stays exercised.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;
  ScriptedBackend(std::vector<ScriptRule> rules, ChatResponse default_response);

  static ScriptedBackend from_json(const json& script);
  static ScriptedBackend from_file(const std::string& path);

  ChatResponse complete(const ChatRequest& request) override;
  std::string describe() const override { return "scripted"; }

  ScriptedBackend& add(ScriptRule rule);
  ScriptedBackend& set_default(ChatResponse response);

 private:
  std::vector<ScriptRule> rules_;
  ChatResponse default_response_;
};

ScriptRule rule_text(std::string tag_regex, std::string text);
ScriptRule rule_tool(std::string tag_regex, std::string tool_name, json arguments);
ChatResponse text_response(std::string text);

Usage estimate_usage(const ChatRequest& request, const ChatResponse& response);

// ---------------------------------------------------------------------------
// OpenAI-compatible live backend

struct OpenAIConfig {
  std::string endpoint;  // base URL, e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_factor = 2.0;
  std::chrono::seconds timeout{180};
};

class OpenAICompatBackend : public Backend {
 public:
  explicit OpenAICompatBackend(OpenAIConfig config);

  ChatResponse complete(const ChatRequest& request) override;
  std::string describe() const override;

  /// Request body in the chat-completions wire format.
  json build_body(const ChatRequest& request) const;
  /// Parses a chat-completions response body; throws MalformedResponse.
  static ChatResponse parse_body(const std::string& body);

 private:
  OpenAIConfig config_;
  std::string scheme_host_;
  std::string path_prefix_;
};

/// `scripted:<fixture path>` or `openai-compat:<endpoint>[?model=<name>]`.
/// Credentials come from CONCORD_API_KEY or OPENAI_API_KEY.
std::shared_ptr<Backend> make_backend(const std::string& spec);

// ---------------------------------------------------------------------------
// Client

class ModelClient {
 public:
  /// `token_budget` <= 0 disables the budget.
  ModelClient(std::shared_ptr<Backend> backend, long token_budget);

  /// Records one request event and one response-or-error event in `sink`.
  /// Throws BudgetExceeded, TransportError or MalformedResponse.
  ChatResponse complete(const ChatRequest& request, TraceBuffer& sink);

  /// Folds a worker's usage into the committed total (called at barriers).
  void commit(const Usage& usage);
  Usage committed() const;
  bool exhausted(const TraceBuffer& sink) const;
  long token_budget() const { return token_budget_; }

 private:
  std::shared_ptr<Backend> backend_;
  long token_budget_;
  mutable std::mutex mutex_;
  Usage committed_;
};

inline constexpr int kMaxRepairs = 2;

/// Requests a structured block and re-prompts with the parse error appended
/// up to `max_repairs` times. Returns nullopt when every attempt fails to
/// parse; transport and budget errors propagate.
template <typename T>
std::optional<T> complete_structured(ModelClient& client, ChatRequest request, TraceBuffer& sink,
                                     Schema schema,
                                     const std::function<T(std::string_view)>& parse,
                                     std::string* last_error = nullptr,
                                     int max_repairs = kMaxRepairs);

}  // namespace concord

#include "concord/model_client_inl.hpp"

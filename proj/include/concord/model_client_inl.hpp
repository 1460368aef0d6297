// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fmt/core.h>

namespace concord {

template <typename T>
std::optional<T> complete_structured(ModelClient& client, ChatRequest request, TraceBuffer& sink,
                                     Schema schema,
                                     const std::function<T(std::string_view)>& parse,
                                     std::string* last_error, int max_repairs) {
  const std::string base_tag = request.request_tag;
  for (int attempt = 0; attempt <= max_repairs; ++attempt) {
    if (attempt > 0) request.request_tag = fmt::format("{}.repair{}", base_tag, attempt);
    auto response = client.complete(request, sink);
    std::string error;
    std::string reply;
    if (response.text) {
      reply = *response.text;
      try {
        return parse(reply);
      } catch (const ParseFailure& e) {
        error = e.what();
      }
    } else {
      reply = fmt::format("(tool call {} requested)", response.tool_call->name);
      error = "a tool call was returned where a structured text reply was required";
    }
    if (last_error) *last_error = error;
    request.messages.push_back(ChatMessage{Role::assistant, reply});
    request.messages.push_back(ChatMessage{
        Role::user, fmt::format("Your previous reply could not be parsed ({}). Reply again using "
                                "exactly this format:\n{}",
                                error, format_hint(schema))});
  }
  return std::nullopt;
}

}  // namespace concord

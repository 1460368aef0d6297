// SPDX-License-Identifier: Apache-2.0
#include "concord/errors.hpp"

#include <fmt/core.h>

namespace concord {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::order_violation: return "OrderViolation";
    case ErrorCode::target_mismatch: return "TargetMismatch";
    case ErrorCode::transport_error: return "TransportError";
    case ErrorCode::malformed_response: return "MalformedResponse";
    case ErrorCode::budget_exceeded: return "BudgetExceeded";
    case ErrorCode::parse_failure: return "ParseFailure";
    case ErrorCode::timeout: return "Timeout";
    case ErrorCode::sandbox_violation: return "SandboxViolation";
    case ErrorCode::unknown_tool: return "UnknownTool";
    case ErrorCode::no_pending_task: return "NoPendingTask";
    case ErrorCode::agent_init_failure: return "AgentInitFailure";
    case ErrorCode::degenerate_input: return "DegenerateInput";
    case ErrorCode::missing_reference: return "MissingReference";
    case ErrorCode::incomplete_trace: return "IncompleteTrace";
    case ErrorCode::replay_divergence: return "ReplayDivergence";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), message)),
      code_(code),
      detail_(message) {}

ErrorCode error_code_from(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::io_error); ++i) {
    auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == name) return code;
  }
  throw Error(ErrorCode::invalid_argument, fmt::format("unknown error name '{}'", name));
}

ParseFailure::ParseFailure(const std::string& message, std::string span)
    : Error(ErrorCode::parse_failure, message), span_(std::move(span)) {}

}  // namespace concord

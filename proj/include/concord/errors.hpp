// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace concord {

enum class ErrorCode {
  invalid_argument,
  order_violation,
  target_mismatch,
  transport_error,
  malformed_response,
  budget_exceeded,
  parse_failure,
  timeout,
  sandbox_violation,
  unknown_tool,
  no_pending_task,
  agent_init_failure,
  degenerate_input,
  missing_reference,
  incomplete_trace,
  replay_divergence,
  config_error,
  io_error,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the error-name prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Inverse of to_string(ErrorCode); throws InvalidArgument on unknown names.
ErrorCode error_code_from(std::string_view name);

// Carries the text span that failed to parse so callers can echo it back in a
// repair prompt.
class ParseFailure : public Error {
 public:
  ParseFailure(const std::string& message, std::string span);

  const std::string& span() const noexcept { return span_; }

 private:
  std::string span_;
};

}  // namespace concord

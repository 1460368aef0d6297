// SPDX-License-Identifier: Apache-2.0
//
// Extraction of structured blocks from free-form model output. Key-value
// blocks (conflicts, resolutions, directives and the agent protocol blocks)
// are located by their root key anywhere in the text and parsed as YAML;
// critic and classifier reports use tagged markup. Every parser throws
// ParseFailure carrying the offending span.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "concord/core_model.hpp"

namespace concord {

enum class Schema {
  conflict_report,
  resolution_set,
  directive_set,
  final_answer,
  critic_report,
  plan,
  task_selection,
  findings,
  replan_decision,
  revision,
  error_type,
};

std::string_view to_string(Schema s);

struct CriticFinding {
  std::string description;
  int occurrence_step = 0;
  std::optional<int> recovered_step;  // absent = unrecovered

  bool operator==(const CriticFinding&) const = default;
};

struct ReplanDecision {
  TaskStatus executed_status = TaskStatus::done;  // done | abandoned | pending (retry)
  std::optional<std::vector<std::string>> new_tasks;
};

struct Revision {
  std::vector<std::string> findings;
  std::optional<std::vector<std::string>> new_tasks;
};

std::vector<Conflict> parse_conflict_report(std::string_view text);
std::vector<Resolution> parse_resolution_set(std::string_view text);
std::vector<Directive> parse_directive_set(std::string_view text);
std::string parse_final_answer(std::string_view text);
std::vector<CriticFinding> parse_critic_report(std::string_view text);
std::vector<std::string> parse_plan(std::string_view text);
std::string parse_task_selection(std::string_view text);
std::vector<std::string> parse_findings(std::string_view text);
ReplanDecision parse_replan_decision(std::string_view text);
Revision parse_revision(std::string_view text);
int parse_error_category(std::string_view text);

using ParsedBlock =
    std::variant<std::vector<Conflict>, std::vector<Resolution>, std::vector<Directive>,
                 std::string, std::vector<CriticFinding>, std::vector<std::string>,
                 ReplanDecision, Revision, int>;

/// Generic entry point: dispatches to the typed parser for `schema`.
/// final_answer and task_selection yield std::string, plan and findings yield
/// std::vector<std::string>, error_type yields the category number.
ParsedBlock parse_structured_block(std::string_view text, Schema schema);

/// Instruction text describing the expected output format of `schema`; used
/// in prompts and repair re-prompts.
std::string_view format_hint(Schema schema);

}  // namespace concord

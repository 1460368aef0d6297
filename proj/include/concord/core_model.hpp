// SPDX-License-Identifier: Apache-2.0
//
// Domain values shared by every module. Everything here is an immutable value
// type: operations return new values and never touch their inputs, so states
// can be handed between agent workers and the module worker without locking.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace concord {

using AgentIndex = int;

enum class ToolProfile { code_only, code_file_search };

struct Problem {
  std::string id;
  std::string statement;
  std::optional<std::string> reference_answer;    // evaluation only
  std::optional<std::string> reference_solution;  // critic input only
  ToolProfile tool_profile = ToolProfile::code_only;
};

// ---------------------------------------------------------------------------
// Belief

enum class BeliefOrigin { init, execution, soft_update, hard_update };

struct BeliefEntry {
  int round = 0;
  BeliefOrigin origin = BeliefOrigin::init;
  std::string text;

  bool operator==(const BeliefEntry&) const = default;
};

/// Append-only factual document owned by one agent. The first entry is
/// always the init entry holding the problem statement.
class BeliefState {
 public:
  BeliefState() = default;

  static BeliefState initial(std::string problem_text);

  const std::vector<BeliefEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  int last_round() const noexcept { return entries_.empty() ? 0 : entries_.back().round; }

  bool operator==(const BeliefState&) const = default;

  /// Rebuilds a belief from stored entries, re-checking every invariant.
  static BeliefState from_entries(std::vector<BeliefEntry> entries);

 private:
  friend BeliefState belief_append(const BeliefState&, int, BeliefOrigin, std::string);
  std::vector<BeliefEntry> entries_;
};

/// Returns `belief` plus one trailing entry. Throws OrderViolation when
/// `round` is below the last entry's round, InvalidArgument on empty text.
BeliefState belief_append(const BeliefState& belief, int round, BeliefOrigin origin,
                          std::string text);

/// Deterministic prompt rendering. Each entry renders independently, so the
/// rendering of a belief is always a prefix of the rendering of any belief
/// appended from it.
std::string belief_render(const BeliefState& belief);
std::string render_entry(const BeliefEntry& entry);

inline constexpr std::string_view kSoftUpdateHeader = "External verification note";

// ---------------------------------------------------------------------------
// Plan

enum class TaskStatus { pending, in_progress, done, abandoned };
enum class TaskOrigin { initial, replan, directive };

struct Task {
  std::string id;
  std::string description;
  TaskStatus status = TaskStatus::pending;
  TaskOrigin origin = TaskOrigin::initial;
  int created_round = 0;

  bool operator==(const Task&) const = default;
};

inline constexpr std::string_view kDirectiveTaskPrefix = "REVISE PLAN PER DIRECTIVE: ";

struct Plan {
  std::vector<Task> tasks;

  bool operator==(const Plan&) const = default;

  const Task* find(std::string_view id) const;
  std::vector<const Task*> pending() const;
  std::size_t count(TaskStatus status) const;
  bool has_pending() const { return !pending().empty(); }
  std::string next_task_id() const;
};

/// Throws InvalidArgument when the plan has duplicate ids or more than one
/// in-progress task.
void validate_plan(const Plan& plan);

/// Builds a plan of pending tasks t1..tn from descriptions.
Plan make_plan(const std::vector<std::string>& descriptions, TaskOrigin origin, int round);

/// Status transition with the "done never returns to pending" rule enforced.
Plan plan_set_status(const Plan& plan, std::string_view task_id, TaskStatus status);

/// Marks all pending tasks abandoned and appends new pending tasks.
Plan plan_replace_pending(const Plan& plan, const std::vector<std::string>& descriptions,
                          TaskOrigin origin, int round);

// ---------------------------------------------------------------------------
// Execution log

enum class ToolName { run_code, read_file, write_file, list_dir, web_search };

struct ToolCall {
  ToolName name = ToolName::run_code;
  std::string arguments;  // JSON object text

  bool operator==(const ToolCall&) const = default;
};

struct ToolResult {
  bool ok = false;
  std::string output;
  long wall_time_ms = 0;

  bool operator==(const ToolResult&) const = default;
};

struct ExecutionStep {
  std::string thought;
  std::optional<ToolCall> tool_call;
  std::optional<ToolResult> tool_result;

  bool operator==(const ExecutionStep&) const = default;
};

enum class ExecutionOutcome { completed, failed, budget_exhausted };

struct ExecutionLog {
  std::string task_id;
  std::vector<ExecutionStep> steps;
  ExecutionOutcome outcome = ExecutionOutcome::failed;

  bool operator==(const ExecutionLog&) const = default;
};

void validate_log(const ExecutionLog& log);

// ---------------------------------------------------------------------------
// Inter-agent messages

struct Conflict {
  std::vector<AgentIndex> agents;
  std::string description;
  std::map<AgentIndex, std::string> claims;

  bool operator==(const Conflict&) const = default;
};

struct Resolution {
  std::vector<AgentIndex> agents;
  std::string description;
  std::map<AgentIndex, std::string> claims;
  std::string correct_claim;
  std::string justification;

  bool operator==(const Resolution&) const = default;
};

struct Directive {
  AgentIndex target_agent_index = 0;
  std::string modification_instruction;

  bool operator==(const Directive&) const = default;
};

/// Structural checks; throw InvalidArgument describing the violation.
void validate_conflict(const Conflict& conflict);
void validate_resolution(const Resolution& resolution);
void validate_resolution(const Resolution& resolution, const Conflict& origin);
void validate_directive(const Directive& directive, int n_agents);

/// Indented key-value block forms used in model-facing text.
std::string render_block(const Conflict& conflict);
std::string render_block(const Resolution& resolution);
std::string render_block(const Directive& directive);

// ---------------------------------------------------------------------------
// Agent

struct AgentState {
  AgentIndex index = 0;
  BeliefState belief;
  Plan plan;
  bool terminated = false;
  std::optional<std::string> final_answer;

  bool operator==(const AgentState&) const = default;
};

/// Stages the directive as a mandatory pending task and abandons the pending
/// tasks it supersedes. Done tasks are untouched.
Plan plan_apply_directive(const Plan& plan, AgentIndex owner, const Directive& directive,
                          int round);

// enum <-> text
std::string_view to_string(ToolProfile v);
std::string_view to_string(BeliefOrigin v);
std::string_view to_string(TaskStatus v);
std::string_view to_string(TaskOrigin v);
std::string_view to_string(ToolName v);
std::string_view to_string(ExecutionOutcome v);

ToolProfile tool_profile_from(std::string_view s);
BeliefOrigin belief_origin_from(std::string_view s);
TaskStatus task_status_from(std::string_view s);
TaskOrigin task_origin_from(std::string_view s);
std::optional<ToolName> tool_name_from(std::string_view s);
ExecutionOutcome execution_outcome_from(std::string_view s);

inline constexpr std::string_view kUnanswered = "UNANSWERED";

}  // namespace concord

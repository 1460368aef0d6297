// SPDX-License-Identifier: Apache-2.0
#include "concord/core_model.hpp"

#include <algorithm>
#include <set>

#include <fmt/core.h>

#include "concord/errors.hpp"
#include "json.hpp"

namespace concord {

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::invalid_argument, what);
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string json_quoted(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

// `key: |` followed by the indented lines, or `key: "..."` for one-liners.
void emit_scalar(std::string& out, std::string_view key, std::string_view value, int indent,
                 bool force_block) {
  const std::string pad(indent, ' ');
  if (!force_block && value.find('\n') == std::string_view::npos) {
    out += fmt::format("{}{}: {}\n", pad, key, json_quoted(value));
    return;
  }
  out += fmt::format("{}{}: |\n", pad, key);
  std::size_t start = 0;
  while (start <= value.size()) {
    auto end = value.find('\n', start);
    if (end == std::string_view::npos) end = value.size();
    auto line = value.substr(start, end - start);
    if (line.empty())
      out += "\n";
    else
      out += fmt::format("{}  {}\n", pad, line);
    start = end + 1;
  }
}

std::string agents_list(const std::vector<AgentIndex>& agents) {
  std::string s = "[";
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(agents[i]);
  }
  return s + "]";
}

void emit_conflict_body(std::string& out, const std::vector<AgentIndex>& agents,
                        std::string_view description,
                        const std::map<AgentIndex, std::string>& claims) {
  out += fmt::format("  agents: {}\n", agents_list(agents));
  emit_scalar(out, "description", description, 2, true);
  out += "  claims:\n";
  for (const auto& [agent, claim] : claims)
    out += fmt::format("    agent_{}: {}\n", agent, json_quoted(claim));
}

void check_claim_keys(const std::vector<AgentIndex>& agents,
                      const std::map<AgentIndex, std::string>& claims) {
  if (agents.empty()) invalid("conflict lists no agents");
  std::set<AgentIndex> unique(agents.begin(), agents.end());
  if (unique.size() != agents.size()) invalid("conflict lists an agent twice");
  for (auto a : agents)
    if (a < 0) invalid(fmt::format("negative agent index {}", a));
  std::set<AgentIndex> keys;
  for (const auto& [k, v] : claims) keys.insert(k);
  if (keys != unique) invalid("claims keys do not match the agents list");
}

}  // namespace

// ---------------------------------------------------------------------------
// Belief

BeliefState BeliefState::initial(std::string problem_text) {
  return belief_append(BeliefState{}, 0, BeliefOrigin::init, std::move(problem_text));
}

BeliefState BeliefState::from_entries(std::vector<BeliefEntry> entries) {
  BeliefState b;
  for (auto& e : entries) b = belief_append(b, e.round, e.origin, std::move(e.text));
  return b;
}

BeliefState belief_append(const BeliefState& belief, int round, BeliefOrigin origin,
                          std::string text) {
  if (blank(text)) invalid("belief entry text is empty");
  if (round < 0) invalid("belief entry round is negative");
  if (belief.empty() && origin != BeliefOrigin::init)
    invalid("the first belief entry must be the init entry");
  if (!belief.empty() && origin == BeliefOrigin::init)
    invalid("a belief has exactly one init entry");
  if (!belief.empty() && round < belief.last_round())
    throw Error(ErrorCode::order_violation,
                fmt::format("round {} precedes last entry round {}", round, belief.last_round()));
  BeliefState next = belief;
  next.entries_.push_back(BeliefEntry{round, origin, std::move(text)});
  return next;
}

std::string render_entry(const BeliefEntry& entry) {
  switch (entry.origin) {
    case BeliefOrigin::init:
      return fmt::format("Problem information:\n{}\n\n", entry.text);
    case BeliefOrigin::execution:
      return fmt::format("Finding (round {}):\n{}\n\n", entry.round, entry.text);
    case BeliefOrigin::soft_update:
      return fmt::format("{} (round {}):\n{}\n\n", kSoftUpdateHeader, entry.round, entry.text);
    case BeliefOrigin::hard_update:
      return fmt::format("Verified correction (round {}), supersedes conflicting findings:\n{}\n\n",
                         entry.round, entry.text);
  }
  return {};
}

std::string belief_render(const BeliefState& belief) {
  std::string out;
  for (const auto& e : belief.entries()) out += render_entry(e);
  return out;
}

// ---------------------------------------------------------------------------
// Plan

const Task* Plan::find(std::string_view id) const {
  for (const auto& t : tasks)
    if (t.id == id) return &t;
  return nullptr;
}

std::vector<const Task*> Plan::pending() const {
  std::vector<const Task*> out;
  for (const auto& t : tasks)
    if (t.status == TaskStatus::pending) out.push_back(&t);
  return out;
}

std::size_t Plan::count(TaskStatus status) const {
  return static_cast<std::size_t>(std::count_if(
      tasks.begin(), tasks.end(), [status](const Task& t) { return t.status == status; }));
}

std::string Plan::next_task_id() const {
  int highest = 0;
  for (const auto& t : tasks) {
    if (t.id.size() > 1 && t.id[0] == 't') {
      try {
        highest = std::max(highest, std::stoi(t.id.substr(1)));
      } catch (const std::exception&) {
      }
    }
  }
  return fmt::format("t{}", highest + 1);
}

void validate_plan(const Plan& plan) {
  std::set<std::string> ids;
  int in_progress = 0;
  for (const auto& t : plan.tasks) {
    if (t.id.empty()) invalid("task without id");
    if (!ids.insert(t.id).second) invalid(fmt::format("duplicate task id {}", t.id));
    if (t.status == TaskStatus::in_progress) ++in_progress;
  }
  if (in_progress > 1) invalid("more than one task in progress");
}

Plan make_plan(const std::vector<std::string>& descriptions, TaskOrigin origin, int round) {
  return plan_replace_pending(Plan{}, descriptions, origin, round);
}

Plan plan_set_status(const Plan& plan, std::string_view task_id, TaskStatus status) {
  Plan next = plan;
  bool found = false;
  for (auto& t : next.tasks) {
    if (t.id != task_id) continue;
    found = true;
    if (t.status == TaskStatus::done && status != TaskStatus::done)
      invalid(fmt::format("task {} is done and cannot change status", t.id));
    t.status = status;
  }
  if (!found) invalid(fmt::format("no task {}", task_id));
  validate_plan(next);
  return next;
}

Plan plan_replace_pending(const Plan& plan, const std::vector<std::string>& descriptions,
                          TaskOrigin origin, int round) {
  Plan next = plan;
  for (auto& t : next.tasks)
    if (t.status == TaskStatus::pending) t.status = TaskStatus::abandoned;
  for (const auto& d : descriptions) {
    if (blank(d)) continue;
    next.tasks.push_back(Task{next.next_task_id(), d, TaskStatus::pending, origin, round});
  }
  validate_plan(next);
  return next;
}

Plan plan_apply_directive(const Plan& plan, AgentIndex owner, const Directive& directive,
                          int round) {
  if (directive.target_agent_index != owner)
    throw Error(ErrorCode::target_mismatch,
                fmt::format("directive targets agent {} but plan belongs to agent {}",
                            directive.target_agent_index, owner));
  if (blank(directive.modification_instruction)) invalid("directive instruction is empty");
  return plan_replace_pending(
      plan, {std::string(kDirectiveTaskPrefix) + directive.modification_instruction},
      TaskOrigin::directive, round);
}

void validate_log(const ExecutionLog& log) {
  if (log.outcome == ExecutionOutcome::completed && log.steps.empty())
    invalid("completed execution log has no steps");
  for (const auto& s : log.steps)
    if (s.tool_call.has_value() != s.tool_result.has_value())
      invalid("tool call without result (or result without call)");
}

// ---------------------------------------------------------------------------
// Conflicts, resolutions, directives

void validate_conflict(const Conflict& conflict) {
  check_claim_keys(conflict.agents, conflict.claims);
  if (blank(conflict.description)) invalid("conflict description is empty");
}

void validate_resolution(const Resolution& resolution) {
  check_claim_keys(resolution.agents, resolution.claims);
  if (blank(resolution.description)) invalid("resolution description is empty");
  if (blank(resolution.correct_claim)) invalid("resolution correct_claim is empty");
}

void validate_resolution(const Resolution& resolution, const Conflict& origin) {
  validate_resolution(resolution);
  for (auto a : resolution.agents)
    if (std::find(origin.agents.begin(), origin.agents.end(), a) == origin.agents.end())
      invalid(fmt::format("resolution names agent {} absent from its conflict", a));
}

void validate_directive(const Directive& directive, int n_agents) {
  if (directive.target_agent_index < 0 || directive.target_agent_index >= n_agents)
    invalid(fmt::format("directive target {} outside [0, {})", directive.target_agent_index,
                        n_agents));
  if (blank(directive.modification_instruction)) invalid("directive instruction is empty");
}

std::string render_block(const Conflict& conflict) {
  std::string out = "conflict:\n";
  emit_conflict_body(out, conflict.agents, conflict.description, conflict.claims);
  return out;
}

std::string render_block(const Resolution& resolution) {
  std::string out = "resolution:\n";
  emit_conflict_body(out, resolution.agents, resolution.description, resolution.claims);
  emit_scalar(out, "correct_claim", resolution.correct_claim, 2, false);
  emit_scalar(out, "justification", resolution.justification, 2, true);
  return out;
}

std::string render_block(const Directive& directive) {
  std::string out = "directive:\n";
  out += fmt::format("  target_agent_index: {}\n", directive.target_agent_index);
  emit_scalar(out, "modification_instruction", directive.modification_instruction, 2, true);
  return out;
}

// ---------------------------------------------------------------------------
// enum names

#define CONCORD_ENUM_NAMES(Type, ...)                                             \
  namespace {                                                                     \
  constexpr std::pair<Type, std::string_view> k##Type##Names[] = {__VA_ARGS__};   \
  }                                                                               \
  std::string_view to_string(Type v) {                                            \
    for (const auto& [k, n] : k##Type##Names)                                     \
      if (k == v) return n;                                                       \
    return "?";                                                                   \
  }

CONCORD_ENUM_NAMES(ToolProfile, {ToolProfile::code_only, "code_only"},
                   {ToolProfile::code_file_search, "code_file_search"})
CONCORD_ENUM_NAMES(BeliefOrigin, {BeliefOrigin::init, "init"},
                   {BeliefOrigin::execution, "execution"},
                   {BeliefOrigin::soft_update, "soft_update"},
                   {BeliefOrigin::hard_update, "hard_update"})
CONCORD_ENUM_NAMES(TaskStatus, {TaskStatus::pending, "pending"},
                   {TaskStatus::in_progress, "in_progress"}, {TaskStatus::done, "done"},
                   {TaskStatus::abandoned, "abandoned"})
CONCORD_ENUM_NAMES(TaskOrigin, {TaskOrigin::initial, "initial"}, {TaskOrigin::replan, "replan"},
                   {TaskOrigin::directive, "directive"})
CONCORD_ENUM_NAMES(ToolName, {ToolName::run_code, "run_code"}, {ToolName::read_file, "read_file"},
                   {ToolName::write_file, "write_file"}, {ToolName::list_dir, "list_dir"},
                   {ToolName::web_search, "web_search"})
CONCORD_ENUM_NAMES(ExecutionOutcome, {ExecutionOutcome::completed, "completed"},
                   {ExecutionOutcome::failed, "failed"},
                   {ExecutionOutcome::budget_exhausted, "budget_exhausted"})

#undef CONCORD_ENUM_NAMES

namespace {
template <typename Table>
auto lookup(const Table& table, std::string_view s, std::string_view what) {
  for (const auto& [k, n] : table)
    if (n == s) return k;
  throw Error(ErrorCode::invalid_argument, fmt::format("unknown {} '{}'", what, s));
}
}  // namespace

ToolProfile tool_profile_from(std::string_view s) {
  return lookup(kToolProfileNames, s, "tool profile");
}
BeliefOrigin belief_origin_from(std::string_view s) {
  return lookup(kBeliefOriginNames, s, "belief origin");
}
TaskStatus task_status_from(std::string_view s) {
  return lookup(kTaskStatusNames, s, "task status");
}
TaskOrigin task_origin_from(std::string_view s) {
  return lookup(kTaskOriginNames, s, "task origin");
}
std::optional<ToolName> tool_name_from(std::string_view s) {
  for (const auto& [k, n] : kToolNameNames)
    if (n == s) return k;
  return std::nullopt;
}
ExecutionOutcome execution_outcome_from(std::string_view s) {
  return lookup(kExecutionOutcomeNames, s, "execution outcome");
}

}  // namespace concord

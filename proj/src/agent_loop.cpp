// SPDX-License-Identifier: Apache-2.0
#include "concord/agent_loop.hpp"

#include <fmt/core.h>

#include "concord/prompts.hpp"

namespace concord {

namespace {

constexpr std::string_view kTaskFailedPrefix = "TASK FAILED";
constexpr std::size_t kRawExtractLimit = 400;

std::string tag(const AgentContext& ctx, int round, std::string_view phase) {
  return fmt::format("a{}.r{}.{}", ctx.index, round, phase);
}

ChatRequest make_request(const AgentContext& ctx, prompts::Prompt prompt, std::string request_tag,
                         bool with_tools) {
  ChatRequest r;
  r.messages = std::move(prompt.messages);
  r.template_id = std::move(prompt.template_id);
  r.request_tag = std::move(request_tag);
  r.temperature = ctx.temperature;
  r.seed = ctx.seed;
  r.max_output_tokens = ctx.max_output_tokens;
  if (with_tools) r.tools = tool_schemas(ctx.problem.tool_profile);
  return r;
}

const std::string& sandbox_of(AgentContext& ctx) {
  if (ctx.sandbox.empty()) ctx.sandbox = fmt::format("agent{}", ctx.index);
  return ctx.sandbox;
}

// Structured call that treats every failure except budget exhaustion as a
// parse failure, so callers can take their fallback path.
template <typename T>
std::optional<T> ask(AgentContext& ctx, ChatRequest request, Schema schema,
                     const std::function<T(std::string_view)>& parse) {
  try {
    return complete_structured<T>(ctx.client, std::move(request), ctx.sink, schema, parse);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::budget_exceeded) throw;
    return std::nullopt;
  }
}

std::string truncate(const std::string& s, std::size_t limit) {
  if (s.size() <= limit) return s;
  return s.substr(0, limit) + "...";
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

json entries_json(const BeliefState& before, const BeliefState& after) {
  json added = json::array();
  for (std::size_t i = before.size(); i < after.size(); ++i) added.push_back(after.entries()[i]);
  return added;
}

}  // namespace

void validate_budget(const StepBudget& budget) {
  if (budget.max_rounds <= 0 || budget.max_react_steps_per_task <= 0 || budget.max_tokens <= 0)
    throw Error(ErrorCode::invalid_argument, "step budget fields must all be positive");
}

AgentState initialize_agent(AgentContext& ctx) {
  sandbox_of(ctx);
  AgentState state;
  state.index = ctx.index;
  state.belief = BeliefState::initial(ctx.problem.statement);
  auto request = make_request(ctx, prompts::agent_init(state.belief), tag(ctx, 0, "init"), false);
  std::string error;
  std::optional<std::vector<std::string>> tasks;
  try {
    tasks = complete_structured<std::vector<std::string>>(ctx.client, request, ctx.sink,
                                                          Schema::plan, parse_plan, &error);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::budget_exceeded) throw;
    error = e.what();
  }
  if (!tasks)
    throw Error(ErrorCode::agent_init_failure,
                fmt::format("agent {} could not obtain an initial plan: {}", ctx.index, error));
  state.plan = make_plan(*tasks, TaskOrigin::initial, 0);
  ctx.sink.emit(EventKind::belief_update, json{{"added", state.belief.entries()}});
  ctx.sink.emit(EventKind::plan_update, json{{"reason", "init"}, {"plan", state.plan}});
  return state;
}

Task select_task(AgentContext& ctx, const AgentState& state, int round) {
  const auto pending = state.plan.pending();
  if (pending.empty())
    throw Error(ErrorCode::no_pending_task, fmt::format("agent {} has no pending task", ctx.index));
  for (const auto* t : pending)
    if (t->origin == TaskOrigin::directive) return *t;
  if (pending.size() == 1) return *pending.front();

  const Plan& plan = state.plan;
  std::function<std::string(std::string_view)> parse = [&plan](std::string_view text) {
    auto id = parse_task_selection(text);
    const auto* t = plan.find(id);
    if (!t || t->status != TaskStatus::pending)
      throw ParseFailure(fmt::format("task '{}' is not a pending task", id), id);
    return id;
  };
  auto chosen = ask<std::string>(
      ctx, make_request(ctx, prompts::agent_select(state.belief, plan), tag(ctx, round, "select"),
                        false),
      Schema::task_selection, parse);
  return chosen ? *plan.find(*chosen) : *pending.front();
}

ExecutionLog execute_task(AgentContext& ctx, const AgentState& state, const Task& task,
                          int round) {
  const auto& sandbox = sandbox_of(ctx);
  ExecutionLog log;
  log.task_id = task.id;
  auto request = make_request(ctx, prompts::agent_execute(state.belief, task), "", true);
  for (int k = 0; k < ctx.budget.max_react_steps_per_task; ++k) {
    request.request_tag = tag(ctx, round, fmt::format("exec.{}", k));
    ChatResponse response;
    try {
      response = ctx.client.complete(request, ctx.sink);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::budget_exceeded) throw;
      log.steps.push_back(ExecutionStep{fmt::format("model call failed: {}", e.what()), {}, {}});
      log.outcome = ExecutionOutcome::failed;
      return log;
    }
    if (response.text) {
      log.steps.push_back(ExecutionStep{*response.text, {}, {}});
      log.outcome = starts_with(*response.text, kTaskFailedPrefix) ? ExecutionOutcome::failed
                                                                   : ExecutionOutcome::completed;
      return log;
    }

    const auto& model_call = *response.tool_call;
    ToolCall call;
    try {
      call = to_tool_call(model_call, ctx.problem.tool_profile);
    } catch (const Error& e) {
      log.steps.push_back(
          ExecutionStep{fmt::format("rejected tool call {}: {}", model_call.name, e.what()), {}, {}});
      request.messages.push_back(ChatMessage{
          Role::assistant, fmt::format("Calling {} with {}", model_call.name, model_call.arguments)});
      request.messages.push_back(prompts::tool_error_message(e.what()));
      continue;
    }
    const auto tool_tag = request.request_tag + ".tool";
    ctx.sink.emit(EventKind::tool_call, json{{"tag", tool_tag}, {"call", call}});
    ToolResult result;
    try {
      result = ctx.toolkit.execute(call, sandbox, tool_tag);
      ctx.sink.emit(EventKind::tool_result, json{{"tag", tool_tag}, {"result", result}});
    } catch (const Error& e) {
      result = ToolResult{false, e.what(), 0};
      ctx.sink.emit(EventKind::tool_result, json{{"tag", tool_tag},
                                                 {"error", to_string(e.code())},
                                                 {"message", e.detail()}});
    }
    log.steps.push_back(ExecutionStep{"", call, result});
    request.messages.push_back(prompts::tool_request_echo(call));
    request.messages.push_back(prompts::tool_result_message(call, result));
  }
  log.outcome = ExecutionOutcome::budget_exhausted;
  return log;
}

BeliefState update_belief(AgentContext& ctx, const AgentState& state, const Task& task,
                          const ExecutionLog& log, int round) {
  if (log.steps.empty()) return state.belief;
  auto findings = ask<std::vector<std::string>>(
      ctx,
      make_request(ctx, prompts::agent_update(state.belief, task, log), tag(ctx, round, "update"),
                   false),
      Schema::findings, parse_findings);
  std::string text;
  if (findings) {
    for (const auto& f : *findings) {
      if (f.find_first_not_of(" \t\n") == std::string::npos) continue;
      if (!text.empty()) text += "\n";
      text += "- " + f;
    }
  } else {
    // Fail open: keep the belief moving with the last thing the agent said.
    for (auto it = log.steps.rbegin(); it != log.steps.rend() && text.empty(); ++it) {
      if (!it->thought.empty()) text = truncate(it->thought, kRawExtractLimit);
      else if (it->tool_result && it->tool_result->ok)
        text = truncate(it->tool_result->output, kRawExtractLimit);
    }
  }
  if (text.empty()) return state.belief;
  return belief_append(state.belief, round, BeliefOrigin::execution, std::move(text));
}

Plan replan(AgentContext& ctx, const AgentState& state, const Task& task, const ExecutionLog& log,
            int round) {
  auto decision = ask<ReplanDecision>(
      ctx,
      make_request(ctx, prompts::agent_replan(state.belief, state.plan, task, log),
                   tag(ctx, round, "replan"), false),
      Schema::replan_decision, parse_replan_decision);
  if (!decision) {
    return plan_set_status(state.plan, task.id,
                           log.outcome == ExecutionOutcome::completed ? TaskStatus::done
                                                                      : TaskStatus::abandoned);
  }
  Plan next = plan_set_status(state.plan, task.id, decision->executed_status);
  if (decision->new_tasks) {
    // A retried task stays pending and is superseded like any other pending task.
    next = plan_replace_pending(next, *decision->new_tasks, TaskOrigin::replan, round);
  }
  return next;
}

AgentStepResult agent_step(AgentContext& ctx, const AgentState& state, int round) {
  AgentStepResult out{state, {}, {}};
  Task task = select_task(ctx, state, round);
  out.task_description = task.description;
  out.state.plan = plan_set_status(state.plan, task.id, TaskStatus::in_progress);
  task.status = TaskStatus::in_progress;

  try {
    out.log = execute_task(ctx, out.state, task, round);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::budget_exceeded) throw;
    out.log = ExecutionLog{task.id, {ExecutionStep{e.what(), {}, {}}}, ExecutionOutcome::failed};
  }

  const BeliefState before = out.state.belief;
  out.state.belief = update_belief(ctx, out.state, task, out.log, round);
  if (out.state.belief.size() != before.size())
    ctx.sink.emit(EventKind::belief_update,
                  json{{"origin", "execution"}, {"added", entries_json(before, out.state.belief)}});

  out.state.plan = replan(ctx, out.state, task, out.log, round);
  ctx.sink.emit(EventKind::plan_update,
                json{{"reason", "replan"}, {"task", task.id}, {"plan", out.state.plan}});
  return out;
}

TerminateDecision check_terminate(const AgentState& state, const StepBudget& budget, int round,
                                  bool tokens_exhausted) {
  if (state.terminated) return TerminateDecision::finalize;
  if (!state.plan.has_pending() || round >= budget.max_rounds || tokens_exhausted)
    return TerminateDecision::finalize;
  return TerminateDecision::continue_running;
}

AgentState finalize_agent(AgentContext& ctx, const AgentState& state, int round, bool allow_call) {
  AgentState next = state;
  next.terminated = true;
  std::optional<std::string> answer;
  if (allow_call) {
    answer = ask<std::string>(
        ctx,
        make_request(ctx, prompts::agent_final(state.belief, state.plan), tag(ctx, round, "final"),
                     false),
        Schema::final_answer, parse_final_answer);
  }
  next.final_answer = answer ? *answer : std::string(kUnanswered);
  ctx.sink.emit(EventKind::finalize, json{{"answer", *next.final_answer}});
  return next;
}

AgentState self_revise(AgentContext& ctx, const AgentState& state, int round) {
  auto revision = ask<Revision>(
      ctx,
      make_request(ctx, prompts::agent_revise(state.belief, state.plan), tag(ctx, round, "revise"),
                   false),
      Schema::revision, parse_revision);
  if (!revision) return state;
  AgentState next = state;
  std::string text;
  for (const auto& f : revision->findings) {
    if (f.find_first_not_of(" \t\n") == std::string::npos) continue;
    if (!text.empty()) text += "\n";
    text += "- " + f;
  }
  if (!text.empty()) {
    next.belief = belief_append(state.belief, round, BeliefOrigin::execution,
                                "Self-revision:\n" + text);
    ctx.sink.emit(EventKind::belief_update,
                  json{{"origin", "revision"}, {"added", entries_json(state.belief, next.belief)}});
  }
  if (revision->new_tasks && !revision->new_tasks->empty()) {
    next.plan = plan_replace_pending(state.plan, *revision->new_tasks, TaskOrigin::replan, round);
    ctx.sink.emit(EventKind::plan_update, json{{"reason", "revision"}, {"plan", next.plan}});
  }
  return next;
}

}  // namespace concord

// SPDX-License-Identifier: Apache-2.0
#include "concord/prompts.hpp"

#include <fmt/core.h>

namespace concord::prompts {

namespace {

constexpr std::string_view kSolverSystem =
    "You are a careful problem-solving agent. You keep a belief (facts established so far) and a "
    "plan (a to-do list of tasks). Verify computations with tools instead of guessing. Notes "
    "marked as external verification come from an outside verifier: weigh them against your own "
    "evidence, they may be wrong.";

Prompt solver(std::string id, std::string user) {
  return Prompt{std::move(id),
                {ChatMessage{Role::system, std::string(kSolverSystem)},
                 ChatMessage{Role::user, std::move(user)}}};
}

std::string reply_with(Schema schema) {
  return fmt::format("Reply with a block in this format:\n{}", format_hint(schema));
}

}  // namespace

std::string render_plan(const Plan& plan) {
  std::string out;
  for (const auto& t : plan.tasks)
    out += fmt::format("[{}] ({}) {}\n", t.id, to_string(t.status), t.description);
  return out;
}

std::string render_log(const ExecutionLog& log) {
  std::string out;
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    const auto& s = log.steps[i];
    if (!s.thought.empty()) out += fmt::format("Step {} thought: {}\n", i + 1, s.thought);
    if (s.tool_call)
      out += fmt::format("Step {} tool: {} {}\n", i + 1, to_string(s.tool_call->name),
                         s.tool_call->arguments);
    if (s.tool_result)
      out += fmt::format("Step {} result ({}): {}\n", i + 1, s.tool_result->ok ? "ok" : "error",
                         s.tool_result->output);
  }
  out += fmt::format("Outcome: {}\n", to_string(log.outcome));
  return out;
}

Prompt agent_init(const BeliefState& belief) {
  return solver("agent.init.v1",
                fmt::format("{}Draft an initial plan for solving the problem as an ordered list of "
                            "concrete tasks.\n{}",
                            belief_render(belief), reply_with(Schema::plan)));
}

Prompt agent_select(const BeliefState& belief, const Plan& plan) {
  return solver("agent.select.v1",
                fmt::format("{}Current plan:\n{}\nChoose the pending task to execute next.\n{}",
                            belief_render(belief), render_plan(plan),
                            reply_with(Schema::task_selection)));
}

Prompt agent_execute(const BeliefState& belief, const Task& task) {
  return solver(
      "agent.execute.v1",
      fmt::format("{}Current task [{}]: {}\n\nWork on this task step by step, calling tools when "
                  "useful. When the task is finished, reply in plain text (no tool call) with "
                  "your conclusion. Begin the reply with \"TASK FAILED:\" if the task cannot be "
                  "completed.",
                  belief_render(belief), task.id, task.description));
}

Prompt agent_update(const BeliefState& belief, const Task& task, const ExecutionLog& log) {
  return solver("agent.update.v1",
                fmt::format("{}Execution log of task [{}] {}:\n{}\nList only the new factual "
                            "findings this execution established, one concise fact per item.\n{}",
                            belief_render(belief), task.id, task.description, render_log(log),
                            reply_with(Schema::findings)));
}

Prompt agent_replan(const BeliefState& belief, const Plan& plan, const Task& task,
                    const ExecutionLog& log) {
  std::string directive;
  if (task.origin == TaskOrigin::directive &&
      task.description.rfind(kDirectiveTaskPrefix, 0) == 0) {
    directive = fmt::format(
        "Task [{}] carries a mandatory directive. Provide new_tasks that rewrite the remaining "
        "plan so that it follows this instruction:\n{}\n\n",
        task.id, task.description.substr(kDirectiveTaskPrefix.size()));
  }
  return solver("agent.replan.v1",
                fmt::format("{}Current plan:\n{}\nTask [{}] ended with outcome {}.\n{}Decide the "
                            "status of task [{}] and whether the pending tasks should change.\n{}",
                            belief_render(belief), render_plan(plan), task.id,
                            to_string(log.outcome), directive, task.id,
                            reply_with(Schema::replan_decision)));
}

Prompt agent_revise(const BeliefState& belief, const Plan& plan) {
  return solver("agent.revise.v1",
                fmt::format("{}Current plan:\n{}\nCritically re-examine your belief and plan. "
                            "Point out and correct any mistaken facts, and revise the pending "
                            "tasks if they rest on a mistake.\n{}",
                            belief_render(belief), render_plan(plan), reply_with(Schema::revision)));
}

Prompt agent_final(const BeliefState& belief, const Plan& plan) {
  return solver("agent.final.v1",
                fmt::format("{}Current plan:\n{}\nState the final answer to the problem. Give the "
                            "answer only, without explanation.\n{}",
                            belief_render(belief), render_plan(plan),
                            reply_with(Schema::final_answer)));
}

ChatMessage tool_request_echo(const ToolCall& call) {
  return ChatMessage{Role::assistant,
                     fmt::format("Calling {} with {}", to_string(call.name), call.arguments)};
}

ChatMessage tool_result_message(const ToolCall& call, const ToolResult& result) {
  return ChatMessage{Role::user, fmt::format("Result of {} ({}):\n{}", to_string(call.name),
                                             result.ok ? "ok" : "error", result.output)};
}

ChatMessage tool_error_message(const std::string& error) {
  return ChatMessage{Role::user, fmt::format("Tool call rejected: {}", error)};
}

ChatMessage budget_exhausted_message() {
  return ChatMessage{Role::user,
                     "The tool-step budget is exhausted. Reply now in plain text without calling "
                     "any tool."};
}

Prompt consistency_extract(const std::vector<std::pair<AgentIndex, BeliefState>>& beliefs) {
  std::string body;
  for (const auto& [index, belief] : beliefs)
    body += fmt::format("### Agent {}\n{}", index, belief_render(belief));
  return Prompt{
      "consistency.extract.v1",
      {ChatMessage{Role::system,
                   "You audit the belief states of parallel agents solving the same problem."},
       ChatMessage{
           Role::user,
           fmt::format(
               "{}\nExtract every conflict, i.e. every set of mutually exclusive factual claims "
               "held by different agents. Create one conflict per set and list only the agents "
               "that assert a claim on that topic. You may also flag a clear factual error of a "
               "single agent as a conflict with one agent.\n{}",
               body, reply_with(Schema::conflict_report))}}};
}

Prompt consistency_resolve(const std::vector<Conflict>& conflicts, bool tools_available) {
  std::string blocks;
  for (const auto& c : conflicts) blocks += render_block(c) + "\n";
  return Prompt{
      "consistency.resolve.v1",
      {ChatMessage{Role::system,
                   "You are a verifier. Your only goal is to determine the correct factual "
                   "information for each conflict. Do not assume any party is correct."},
       ChatMessage{Role::user,
                   fmt::format("{}{}When you have verified the claims, reply without a tool call.\n{}",
                               blocks,
                               tools_available ? "Verify the competing claims with tools.\n"
                                               : "Verify the competing claims by reasoning.\n",
                               reply_with(Schema::resolution_set))}}};
}

Prompt diversify_analyze(const std::vector<std::pair<AgentIndex, Plan>>& plans) {
  std::string body;
  for (const auto& [index, plan] : plans)
    body += fmt::format("### Agent {}\n{}\n", index, render_plan(plan));
  return Prompt{
      "diversify.analyze.v1",
      {ChatMessage{Role::system,
                   "You coordinate the exploration strategies of parallel agents."},
       ChatMessage{Role::user,
                   fmt::format("{}Analyze these plans jointly. Find agents whose strategies are "
                               "redundant and reasoning directions that nobody explores. Redirect "
                               "redundant agents toward orthogonal strategies. Assign at most one "
                               "directive per agent.\n{}",
                               body, reply_with(Schema::directive_set))}}};
}

Prompt critic(const std::string& agent_id, const Problem& problem,
              const std::vector<CriticStep>& steps) {
  std::string execution;
  for (std::size_t k = 0; k < steps.size(); ++k)
    execution += fmt::format("  <step_{0}>\n    Action: {1}\n    Memory Diff: {2}\n  </step_{0}>\n",
                             k, steps[k].action, steps[k].memory_diff);
  auto text = fmt::format(
      "You are an expert Critic. Your goal is to evaluate the solving process\n"
      "of a specific agent ({0}) regarding the given problem.\n\n"
      "# Problem: {1}\n\n"
      "# Reference Solution: {2}\n"
      "# Reference Answer: {3}\n\n"
      "# Model Execution of {0}\n"
      "The execution log below belongs to {0}. Focus on {0}'s workflow only.\n"
      "<model_execution>\n{4}</model_execution>\n\n"
      "# Your Task\n"
      "1. Analyze the \"Action\" and \"Memory Diff\" of {0}.\n"
      "2. Identify \"Factual Errors\" committed by {0}.\n"
      "   - Definition: A Factual Error is where {0} incorrectly derives\n"
      "     an intermediate result or maintains an incorrect intermediate result\n"
      "     that impacts decision-making.\n"
      "   - Exclusions: Minor tool errors, or errors made by other agents.\n\n"
      "3. For each Factual Error:\n"
      "   - Error Type: Description.\n"
      "   - Occurrence Step: Step number where {0} introduced the error.\n"
      "   - Recovered Step: Step number where the error was corrected (or \"N/A\").\n\n"
      "4. Final Check:\n"
      "   - If the agent's final answer is INCORRECT (differs from Reference Answer),\n"
      "     there MUST be at least one Factual Error that is \"N/A\" (Unrecovered).\n"
      "   - Do NOT mark an error as \"Recovered\" if the agent proceeded to a wrong\n"
      "     conclusion based on a related misconception.\n\n"
      "# Output Format\n"
      "Provide your analysis in the following XML format:\n{5}\n",
      agent_id, problem.statement, problem.reference_solution.value_or(""),
      problem.reference_answer.value_or(""), execution, format_hint(Schema::critic_report));
  return Prompt{"critic.v1", {ChatMessage{Role::user, std::move(text)}}};
}

Prompt critic_consistency_retry(const std::string& reason) {
  return Prompt{"critic.retry.v1",
                {ChatMessage{Role::user,
                             fmt::format("Your analysis violates the final check: {}. Re-examine "
                                         "the execution and reply again in the same XML format.",
                                         reason)}}};
}

Prompt classify_error(const std::string& question, const std::string& agent_id,
                      int occurrence_step, const std::string& error_description,
                      const std::vector<std::pair<std::string, std::string>>& other_logs) {
  std::string logs;
  for (const auto& [name, log] : other_logs) logs += fmt::format("## {}\n{}\n", name, log);
  auto text = fmt::format(
      "You are an expert analyst evaluating multi-agent reasoning systems.\n"
      "Your task is to classify whether a specific factual error made by\n"
      "one agent is detectable via cross-agent conflict analysis.\n\n"
      "# Task\n{0}\n\n"
      "# Error Made by Agent {1}\n"
      "The following error was introduced at step {2}: \n\"{3}\"\n\n"
      "# Reasoning Logs of Other Agents\n"
      "Below are the reasoning logs of the other {4} agents working on the same task.\n{5}\n"
      "# Your Task\n"
      "Classify the error above into exactly ONE of these categories,\n"
      "based on the other agents' logs:\n\n"
      "CATEGORY 1 (Conflicting -- correct): At least one other agent has\n"
      "ALREADY ESTABLISHED the CORRECT value/fact that directly contradicts\nthe error.\n\n"
      "CATEGORY 2 (Conflicting -- incorrect): At least one other agent has\n"
      "already established a DIFFERENT value/fact on the same topic, but\n"
      "that value is also incorrect.\n\n"
      "CATEGORY 3 (Shared): All other agents make the same error.\n\n"
      "CATEGORY 4 (Silent): No other agent explicitly discusses, confirms,\n"
      "or contradicts this specific fact.\n\n"
      "CATEGORY 5 (Not an error): The described \"error\" does not appear to\n"
      "be a genuine factual mistake. Category 5 entries are excluded from\n"
      "the final computation.\n\n"
      "Think step by step. Then output your classification in the following\nXML format:\n{6}\n",
      question, agent_id, occurrence_step, error_description, other_logs.size(), logs,
      format_hint(Schema::error_type));
  return Prompt{"classify.v1", {ChatMessage{Role::user, std::move(text)}}};
}

}  // namespace concord::prompts

// SPDX-License-Identifier: Apache-2.0
//
// Single-agent solve loop: initialize, then per round select a task, run it
// as a ReAct loop, fold findings into the belief and revise the plan.
#pragma once

#include <optional>
#include <string>

#include "concord/core_model.hpp"
#include "concord/model_client.hpp"
#include "concord/toolkit.hpp"

namespace concord {

struct StepBudget {
  int max_rounds = 12;
  int max_react_steps_per_task = 10;
  long max_tokens = 2'000'000;
};

/// Throws InvalidArgument unless every field is positive.
void validate_budget(const StepBudget& budget);

/// Everything one agent worker needs for a round. The sink belongs to the
/// worker; the client and toolkit are shared and thread-safe.
struct AgentContext {
  const Problem& problem;
  ModelClient& client;
  Toolkit& toolkit;
  TraceBuffer& sink;
  AgentIndex index = 0;
  StepBudget budget;
  double temperature = 0.7;
  std::optional<long> seed;
  std::string sandbox;  // defaults to "agent<index>"
  int max_output_tokens = 4096;
};

/// Throws AgentInitFailure when no plan can be obtained.
AgentState initialize_agent(AgentContext& ctx);

/// Throws NoPendingTask when the plan has nothing pending.
Task select_task(AgentContext& ctx, const AgentState& state, int round);

ExecutionLog execute_task(AgentContext& ctx, const AgentState& state, const Task& task, int round);

BeliefState update_belief(AgentContext& ctx, const AgentState& state, const Task& task,
                          const ExecutionLog& log, int round);

Plan replan(AgentContext& ctx, const AgentState& state, const Task& task, const ExecutionLog& log,
            int round);

struct AgentStepResult {
  AgentState state;
  ExecutionLog log;
  std::string task_description;
};

/// One select, execute, update, replan cycle. Only BudgetExceeded escapes.
AgentStepResult agent_step(AgentContext& ctx, const AgentState& state, int round);

enum class TerminateDecision { continue_running, finalize };

TerminateDecision check_terminate(const AgentState& state, const StepBudget& budget, int round,
                                  bool tokens_exhausted);

/// Final-answer extraction. Falls back to the UNANSWERED sentinel; when
/// `allow_call` is false no model call is made.
AgentState finalize_agent(AgentContext& ctx, const AgentState& state, int round,
                          bool allow_call = true);

/// Periodic self-critique used by the sequential-revision protocols.
AgentState self_revise(AgentContext& ctx, const AgentState& state, int round);

}  // namespace concord

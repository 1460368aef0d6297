// SPDX-License-Identifier: Apache-2.0
//
// Versioned prompt templates. Every request records its template id in the
// trace, so a template change is visible when comparing runs.
#pragma once

#include <string>
#include <vector>

#include "concord/core_model.hpp"
#include "concord/model_client.hpp"

namespace concord::prompts {

struct Prompt {
  std::string template_id;
  std::vector<ChatMessage> messages;
};

std::string render_plan(const Plan& plan);
std::string render_log(const ExecutionLog& log);

Prompt agent_init(const BeliefState& belief);
Prompt agent_select(const BeliefState& belief, const Plan& plan);
Prompt agent_execute(const BeliefState& belief, const Task& task);
Prompt agent_update(const BeliefState& belief, const Task& task, const ExecutionLog& log);
Prompt agent_replan(const BeliefState& belief, const Plan& plan, const Task& task,
                    const ExecutionLog& log);
Prompt agent_revise(const BeliefState& belief, const Plan& plan);
Prompt agent_final(const BeliefState& belief, const Plan& plan);

/// ReAct continuation messages.
ChatMessage tool_request_echo(const ToolCall& call);
ChatMessage tool_result_message(const ToolCall& call, const ToolResult& result);
ChatMessage tool_error_message(const std::string& error);
ChatMessage budget_exhausted_message();

Prompt consistency_extract(const std::vector<std::pair<AgentIndex, BeliefState>>& beliefs);
Prompt consistency_resolve(const std::vector<Conflict>& conflicts, bool tools_available);
Prompt diversify_analyze(const std::vector<std::pair<AgentIndex, Plan>>& plans);

struct CriticStep {
  std::string action;
  std::string memory_diff;
};

Prompt critic(const std::string& agent_id, const Problem& problem,
              const std::vector<CriticStep>& steps);
Prompt critic_consistency_retry(const std::string& reason);

Prompt classify_error(const std::string& question, const std::string& agent_id,
                      int occurrence_step, const std::string& error_description,
                      const std::vector<std::pair<std::string, std::string>>& other_logs);

}  // namespace concord::prompts

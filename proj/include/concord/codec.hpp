// SPDX-License-Identifier: Apache-2.0
// Structured-object (JSON) form of the core values, used by traces and run
// records.
#pragma once

#include "concord/core_model.hpp"
#include "json.hpp"

namespace concord {

using json = nlohmann::json;

void to_json(json& j, const Problem& v);
void from_json(const json& j, Problem& v);
void to_json(json& j, const BeliefEntry& v);
void from_json(const json& j, BeliefEntry& v);
void to_json(json& j, const BeliefState& v);
void from_json(const json& j, BeliefState& v);
void to_json(json& j, const Task& v);
void from_json(const json& j, Task& v);
void to_json(json& j, const Plan& v);
void from_json(const json& j, Plan& v);
void to_json(json& j, const ToolCall& v);
void from_json(const json& j, ToolCall& v);
void to_json(json& j, const ToolResult& v);
void from_json(const json& j, ToolResult& v);
void to_json(json& j, const ExecutionStep& v);
void from_json(const json& j, ExecutionStep& v);
void to_json(json& j, const ExecutionLog& v);
void from_json(const json& j, ExecutionLog& v);
void to_json(json& j, const Conflict& v);
void from_json(const json& j, Conflict& v);
void to_json(json& j, const Resolution& v);
void from_json(const json& j, Resolution& v);
void to_json(json& j, const Directive& v);
void from_json(const json& j, Directive& v);
void to_json(json& j, const AgentState& v);
void from_json(const json& j, AgentState& v);

/// Problem without the reference fields, for anything an agent may see.
json public_problem_json(const Problem& p);

/// Reads a line-delimited file of problem objects.
std::vector<Problem> load_problems(const std::string& path);

/// Recursively drops every "wall_time_ms" key.
json mask_wall_times(json j);

}  // namespace concord

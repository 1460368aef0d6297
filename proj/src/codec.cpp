// SPDX-License-Identifier: Apache-2.0
#include "concord/codec.hpp"

#include <fstream>

#include <fmt/core.h>

#include "concord/errors.hpp"

namespace concord {

namespace {

json claims_json(const std::map<AgentIndex, std::string>& claims) {
  json j = json::object();
  for (const auto& [k, v] : claims) j[std::to_string(k)] = v;
  return j;
}

std::map<AgentIndex, std::string> claims_from(const json& j) {
  std::map<AgentIndex, std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it)
    out[std::stoi(it.key())] = it.value().get<std::string>();
  return out;
}

}  // namespace

void to_json(json& j, const Problem& v) {
  j = public_problem_json(v);
  if (v.reference_answer) j["reference_answer"] = *v.reference_answer;
  if (v.reference_solution) j["reference_solution"] = *v.reference_solution;
}

void from_json(const json& j, Problem& v) {
  v.id = j.at("id").get<std::string>();
  v.statement = j.at("statement").get<std::string>();
  v.reference_answer.reset();
  v.reference_solution.reset();
  if (j.contains("reference_answer") && !j["reference_answer"].is_null())
    v.reference_answer = j["reference_answer"].is_string() ? j["reference_answer"].get<std::string>()
                                                           : j["reference_answer"].dump();
  if (j.contains("reference_solution") && !j["reference_solution"].is_null())
    v.reference_solution = j["reference_solution"].get<std::string>();
  v.tool_profile = tool_profile_from(j.value("tool_profile", std::string("code_only")));
}

json public_problem_json(const Problem& p) {
  return json{{"id", p.id}, {"statement", p.statement}, {"tool_profile", to_string(p.tool_profile)}};
}

void to_json(json& j, const BeliefEntry& v) {
  j = json{{"round", v.round}, {"origin", to_string(v.origin)}, {"text", v.text}};
}
void from_json(const json& j, BeliefEntry& v) {
  v.round = j.at("round").get<int>();
  v.origin = belief_origin_from(j.at("origin").get<std::string>());
  v.text = j.at("text").get<std::string>();
}

void to_json(json& j, const BeliefState& v) { j = v.entries(); }
void from_json(const json& j, BeliefState& v) {
  v = BeliefState::from_entries(j.get<std::vector<BeliefEntry>>());
}

void to_json(json& j, const Task& v) {
  j = json{{"id", v.id},
           {"description", v.description},
           {"status", to_string(v.status)},
           {"origin", to_string(v.origin)},
           {"created_round", v.created_round}};
}
void from_json(const json& j, Task& v) {
  v.id = j.at("id").get<std::string>();
  v.description = j.at("description").get<std::string>();
  v.status = task_status_from(j.at("status").get<std::string>());
  v.origin = task_origin_from(j.at("origin").get<std::string>());
  v.created_round = j.value("created_round", 0);
}

void to_json(json& j, const Plan& v) { j = v.tasks; }
void from_json(const json& j, Plan& v) {
  v.tasks = j.get<std::vector<Task>>();
  validate_plan(v);
}

void to_json(json& j, const ToolCall& v) {
  j = json{{"name", to_string(v.name)}, {"arguments", v.arguments}};
}
void from_json(const json& j, ToolCall& v) {
  auto name = tool_name_from(j.at("name").get<std::string>());
  if (!name) throw Error(ErrorCode::unknown_tool, j.at("name").get<std::string>());
  v.name = *name;
  v.arguments = j.at("arguments").get<std::string>();
}

void to_json(json& j, const ToolResult& v) {
  j = json{{"ok", v.ok}, {"output", v.output}, {"wall_time_ms", v.wall_time_ms}};
}
void from_json(const json& j, ToolResult& v) {
  v.ok = j.at("ok").get<bool>();
  v.output = j.at("output").get<std::string>();
  v.wall_time_ms = j.value("wall_time_ms", 0L);
}

void to_json(json& j, const ExecutionStep& v) {
  j = json{{"thought", v.thought}};
  if (v.tool_call) j["tool_call"] = *v.tool_call;
  if (v.tool_result) j["tool_result"] = *v.tool_result;
}
void from_json(const json& j, ExecutionStep& v) {
  v.thought = j.at("thought").get<std::string>();
  v.tool_call.reset();
  v.tool_result.reset();
  if (j.contains("tool_call")) v.tool_call = j["tool_call"].get<ToolCall>();
  if (j.contains("tool_result")) v.tool_result = j["tool_result"].get<ToolResult>();
}

void to_json(json& j, const ExecutionLog& v) {
  j = json{{"task_id", v.task_id}, {"steps", v.steps}, {"outcome", to_string(v.outcome)}};
}
void from_json(const json& j, ExecutionLog& v) {
  v.task_id = j.at("task_id").get<std::string>();
  v.steps = j.at("steps").get<std::vector<ExecutionStep>>();
  v.outcome = execution_outcome_from(j.at("outcome").get<std::string>());
}

void to_json(json& j, const Conflict& v) {
  j = json{{"agents", v.agents}, {"description", v.description}, {"claims", claims_json(v.claims)}};
}
void from_json(const json& j, Conflict& v) {
  v.agents = j.at("agents").get<std::vector<AgentIndex>>();
  v.description = j.at("description").get<std::string>();
  v.claims = claims_from(j.at("claims"));
  validate_conflict(v);
}

void to_json(json& j, const Resolution& v) {
  j = json{{"agents", v.agents},
           {"description", v.description},
           {"claims", claims_json(v.claims)},
           {"correct_claim", v.correct_claim},
           {"justification", v.justification}};
}
void from_json(const json& j, Resolution& v) {
  v.agents = j.at("agents").get<std::vector<AgentIndex>>();
  v.description = j.at("description").get<std::string>();
  v.claims = claims_from(j.at("claims"));
  v.correct_claim = j.at("correct_claim").get<std::string>();
  v.justification = j.value("justification", j.value("reason", std::string()));
  validate_resolution(v);
}

void to_json(json& j, const Directive& v) {
  j = json{{"target_agent_index", v.target_agent_index},
           {"modification_instruction", v.modification_instruction}};
}
void from_json(const json& j, Directive& v) {
  v.target_agent_index = j.at("target_agent_index").get<AgentIndex>();
  v.modification_instruction = j.at("modification_instruction").get<std::string>();
}

void to_json(json& j, const AgentState& v) {
  j = json{{"index", v.index},
           {"belief", v.belief},
           {"plan", v.plan},
           {"terminated", v.terminated},
           {"final_answer", v.final_answer ? json(*v.final_answer) : json(nullptr)}};
}
void from_json(const json& j, AgentState& v) {
  v.index = j.at("index").get<AgentIndex>();
  v.belief = j.at("belief").get<BeliefState>();
  v.plan = j.at("plan").get<Plan>();
  v.terminated = j.at("terminated").get<bool>();
  v.final_answer.reset();
  if (!j.at("final_answer").is_null()) v.final_answer = j["final_answer"].get<std::string>();
}

std::vector<Problem> load_problems(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot open problems file {}", path));
  std::vector<Problem> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<Problem>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::config_error, fmt::format("{}:{}: {}", path, line_no, e.what()));
    }
    if (out.back().id.empty())
      throw Error(ErrorCode::config_error, fmt::format("{}:{}: empty problem id", path, line_no));
  }
  return out;
}

json mask_wall_times(json j) {
  if (j.is_object()) {
    j.erase("wall_time_ms");
    for (auto& [k, v] : j.items()) v = mask_wall_times(std::move(v));
  } else if (j.is_array()) {
    for (auto& v : j) v = mask_wall_times(std::move(v));
  }
  return j;
}

}  // namespace concord

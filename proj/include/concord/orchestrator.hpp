// SPDX-License-Identifier: Apache-2.0
//
// Runs one protocol over N agents for one problem. Agents advance one
// AgentStep per round concurrently; at the barrier the orchestrator flushes
// their trace buffers in index order, then runs the between-round modules
// on the snapshots and hands the updated states back for the next round.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "concord/agent_loop.hpp"
#include "concord/consistency.hpp"
#include "concord/diversify.hpp"
#include "concord/vote.hpp"

namespace concord {

enum class Protocol { base_agent, sequential_revision, independent, independent_sr, excomm };

std::string_view to_string(Protocol p);
/// Throws ConfigError on unknown names.
Protocol protocol_from(std::string_view s);

struct SamplingConfig {
  double solver_temperature = 0.7;
  double module_temperature = 0.0;
  int max_output_tokens = 4096;
};

struct ProtocolConfig {
  Protocol protocol = Protocol::excomm;
  int n_agents = 4;
  StepBudget budgets;
  ConsistencyConfig consistency;
  DiversifyConfig diversify;
  SamplingConfig sampling;
  long seed = 0;
  bool parallel_agents = true;
};

/// Applies protocol-implied settings (single-agent protocols force N = 1)
/// and checks the rest. Throws ConfigError.
ProtocolConfig normalize_config(ProtocolConfig config);

void to_json(json& j, const ProtocolConfig& v);
void from_json(const json& j, ProtocolConfig& v);

struct RoundStep {
  int round = 0;
  std::string task_id;
  std::string task_description;
  ExecutionLog log;
  std::vector<std::string> findings;  // execution entries added this round
  std::size_t belief_size = 0;        // after the barrier
  Plan plan;                          // after the barrier
};

enum class AgentStatus { finished, init_failed, failed };

struct AgentTrajectory {
  AgentIndex index = 0;
  AgentStatus status = AgentStatus::finished;
  std::string error;
  std::vector<RoundStep> steps;
  AgentState final_state;
};

struct ModuleRound {
  int round = 0;
  std::vector<Conflict> conflicts;
  std::vector<Resolution> resolutions;
  std::vector<Directive> directives;
  std::map<AgentIndex, int> belief_updates;  // agent -> entries appended
};

enum class RunStatus { completed, budget_exhausted, failed };

std::string_view to_string(RunStatus s);

struct RunRecord {
  std::string run_id;
  std::string problem_id;
  ProtocolConfig config;
  std::vector<AgentTrajectory> agents;
  std::vector<std::string> final_answers;
  std::string aggregated_answer;
  std::string aggregated_display;
  Usage usage;
  long wall_time_ms = 0;
  int rounds = 0;
  RunStatus status = RunStatus::completed;
  std::vector<ModuleRound> modules;
};

void to_json(json& j, const RoundStep& v);
void from_json(const json& j, RoundStep& v);
void to_json(json& j, const AgentTrajectory& v);
void from_json(const json& j, AgentTrajectory& v);
void to_json(json& j, const ModuleRound& v);
void from_json(const json& j, ModuleRound& v);
void to_json(json& j, const RunRecord& v);
void from_json(const json& j, RunRecord& v);

struct RunContext {
  std::shared_ptr<Backend> backend;
  Toolkit& toolkit;
  TraceRecorder& recorder;
  std::string run_id;  // also the sandbox namespace of this run
};

/// Executes `problem` under `config`. Only configuration errors escape.
RunRecord run_protocol(const Problem& problem, const ProtocolConfig& config, RunContext& ctx);

/// Placeholder for a search-based baseline: selecting it is a configuration
/// error until beam width, scoring and pruning are defined.
class TreeSearchProtocol {
 public:
  struct Params {
    int beam_width = 0;
    int depth = 0;
  };
  explicit TreeSearchProtocol(Params params);
  RunRecord run(const Problem& problem, RunContext& ctx);

 private:
  Params params_;
};

}  // namespace concord

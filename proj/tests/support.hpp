// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures: a deterministic in-process toolkit and scripted
// scenarios used by unit and acceptance tests.
#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "concord/config.hpp"
#include "concord/orchestrator.hpp"
#include "concord/replay.hpp"
#include "concord/toolkit.hpp"

namespace concord::testing {

/// run_code evaluates `print(<a>*<b>)` and `print(<n>)`; everything else
/// prints "ok". Other tools answer with canned text. Records every call.
class FakeToolkit : public Toolkit {
 public:
  struct Call {
    ToolCall call;
    std::string sandbox;
    std::string tag;
  };

  ToolResult execute(const ToolCall& call, const std::string& sandbox,
                     const std::string& tag) override;

  std::vector<Call> calls() const;
  void fail_with(ErrorCode code) { fault_ = code; }

 private:
  mutable std::mutex mutex_;
  std::vector<Call> calls_;
  std::optional<ErrorCode> fault_;
};

ScriptRule text_rule(const std::string& tag_regex, const std::string& text);
ScriptRule tool_rule(const std::string& tag_regex, const std::string& code);

// ---------------------------------------------------------------------------
// Planted 96/72 disagreement, four agents. Agents 1 and 2 state the largest
// two-digit common multiple in round 2 (96 and 72); agents 0 and 3 work on
// other sub-steps. The conflict surfaces at round 2.

inline constexpr int kPlantedRound = 2;

Problem planted_problem();
std::shared_ptr<ScriptedBackend> planted_backend();
ProtocolConfig planted_config();

std::string sample_conflict_block();
std::string sample_resolution_block();
std::string sample_directive_block();

// ---------------------------------------------------------------------------
// Generic toy scenario for any N. Each agent has `tasks` tasks with text
// unique to it. Optional planted conflict (agents 0 and 1) and directive
// (last agent) at the given rounds.

struct ToyOptions {
  int n_agents = 4;
  int tasks = 3;
  int conflict_round = 0;   // 0: none
  int directive_round = 0;  // 0: none
  int delay_ms = 0;
};

Problem toy_problem(const std::string& id = "toy");
std::shared_ptr<ScriptedBackend> toy_backend(const ToyOptions& options);
std::string toy_task_text(int agent, int task);

ProtocolConfig make_config(Protocol protocol, int n_agents);

struct RunResult {
  RunRecord record;
  std::vector<TraceEvent> events;
};

/// Runs in memory (no files).
RunResult run_in_memory(const Problem& problem, const ProtocolConfig& config,
                        std::shared_ptr<Backend> backend, Toolkit& toolkit,
                        const std::string& run_id = "run");

/// Runs and persists trace.jsonl + record.json under `dir`.
RunRecord run_to_disk(const Problem& problem, const ProtocolConfig& config,
                      std::shared_ptr<Backend> backend, Toolkit& toolkit,
                      const std::filesystem::path& dir, const std::string& run_id);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

/// Synthetic record of `n_agents` agents over `rounds` rounds. Every round
/// of every agent carries the marker "MK<agent>R<round>X" in its task
/// description, its thought, its belief entry and a task it creates.
RunRecord marked_record(int n_agents, int rounds, unsigned seed);
std::string marker(int agent, int round);

// ---------------------------------------------------------------------------
// Trace scans

/// Text of every message in a request event.
std::string request_text(const TraceEvent& event);

/// Number of barrier-ordering violations.
int barrier_violations(const std::vector<TraceEvent>& events);

/// Resolver requests that contain a full rendered belief of some agent.
int resolver_isolation_violations(const std::vector<TraceEvent>& events,
                                  const RunRecord& record);

/// Agent requests that contain task text belonging only to another agent.
int plan_isolation_violations(const std::vector<TraceEvent>& events);

}  // namespace concord::testing

// SPDX-License-Identifier: Apache-2.0
//
// Cross-agent belief auditing. Runs between rounds on belief snapshots:
// extract conflicting claims, adjudicate them in an isolated tool-using
// loop, and hand each involved agent its resolutions as appended notes.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "concord/core_model.hpp"
#include "concord/model_client.hpp"
#include "concord/toolkit.hpp"

namespace concord {

enum class UpdateMode { soft, hard };

std::string_view to_string(UpdateMode m);
UpdateMode update_mode_from(std::string_view s);

struct ConsistencyConfig {
  bool enabled = true;
  int period = 1;
  int resolver_tool_budget = 10;
  UpdateMode update_mode = UpdateMode::soft;
};

struct ConflictReport {
  int round = 0;
  std::vector<Conflict> conflicts;
};

struct ResolutionSet {
  int round = 0;
  std::vector<Resolution> resolutions;
};

/// Shared plumbing for the between-round modules.
struct ModuleContext {
  ModelClient& client;
  Toolkit& toolkit;
  TraceBuffer& sink;
  ToolProfile profile = ToolProfile::code_only;
  std::optional<long> seed;
  std::string sandbox = "resolver";
  int max_output_tokens = 4096;
  double temperature = 0.0;
};

/// `agents` are the active agents' snapshots. Fewer than two yields an empty
/// report without a model call. Fails open to an empty report.
ConflictReport extract_conflicts(ModuleContext& ctx, const std::vector<AgentState>& agents,
                                 int round);

/// One adjudication loop over the whole report. Unmatched or unresolved
/// conflicts are dropped.
ResolutionSet resolve_conflicts(ModuleContext& ctx, const ConflictReport& report,
                                int tool_budget);

/// Pairs a resolution with the conflict it answers: equal (or prefix)
/// normalized descriptions and agents drawn from the conflict's agents.
std::optional<std::size_t> match_conflict(const Resolution& r, const std::vector<Conflict>& cs,
                                          const std::vector<bool>& taken);

/// agent index -> resolutions naming it, in set order. Every listed agent
/// gets an entry, possibly empty.
std::map<AgentIndex, std::vector<Resolution>> dispatch(const ResolutionSet& set,
                                                       const std::vector<AgentIndex>& agents);

std::string soft_update_text(const Resolution& r, AgentIndex agent);
std::string hard_update_text(const Resolution& r, AgentIndex agent);

/// Appends the resolution to the agent's belief. Throws TargetMismatch when
/// the agent is not part of the resolution.
AgentState apply_soft_update(const AgentState& state, const Resolution& r, int round,
                             UpdateMode mode = UpdateMode::soft);

}  // namespace concord

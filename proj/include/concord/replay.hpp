// SPDX-License-Identifier: Apache-2.0
//
// Run persistence (runs/<run-id>/trace.jsonl + record.json) and
// deterministic replay: the run is executed again with recorded model
// responses and tool results standing in for live calls.
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "concord/orchestrator.hpp"

namespace concord {

struct RunFiles {
  std::filesystem::path dir;

  std::filesystem::path trace() const { return dir / "trace.jsonl"; }
  std::filesystem::path record() const { return dir / "record.json"; }
};

/// record.json holds the record plus the agent-visible problem, which replay
/// needs to regenerate prompts.
void save_record(const std::filesystem::path& file, const RunRecord& record,
                 const Problem& problem);
RunRecord load_record(const std::filesystem::path& file, Problem* problem = nullptr);

/// Serves recorded responses by request tag. A regenerated request that
/// differs from the recorded one raises ReplayDivergence.
class ReplayBackend : public Backend {
 public:
  /// Throws IncompleteTrace when a request has no matching response.
  explicit ReplayBackend(const std::vector<TraceEvent>& events);

  ChatResponse complete(const ChatRequest& request) override;
  std::string describe() const override { return "replay"; }

 private:
  struct Exchange {
    json request;
    std::string template_id;
    json response;  // response object, or {"error","message"}
  };
  std::map<std::string, Exchange> exchanges_;
};

/// Serves recorded tool results by tag.
class ReplayToolkit : public Toolkit {
 public:
  explicit ReplayToolkit(const std::vector<TraceEvent>& events);

  ToolResult execute(const ToolCall& call, const std::string& sandbox,
                     const std::string& tag) override;

 private:
  struct Recorded {
    json call;
    json result;  // result object, or {"error","message"}
  };
  std::map<std::string, Recorded> calls_;
};

/// Event equality ignoring wall time.
bool events_equivalent(const TraceEvent& a, const TraceEvent& b);

/// Replays the run stored in `files` and checks that the regenerated trace
/// and record equal the stored ones (wall times masked). Returns the
/// regenerated record. Throws IncompleteTrace or ReplayDivergence.
RunRecord replay_run(const RunFiles& files);

}  // namespace concord

// SPDX-License-Identifier: Apache-2.0
//
// Trace events and their sequencing. Workers never write to the run trace
// directly: each worker fills its own TraceBuffer during a round and the
// orchestrator flushes the buffers in a fixed order at the barrier, so
// sequence numbers are deterministic even when agents run concurrently.
#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "concord/codec.hpp"

namespace concord {

inline constexpr int kTraceSchemaVersion = 1;

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;

  long total() const { return prompt_tokens + completion_tokens; }
  Usage& operator+=(const Usage& o) {
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    return *this;
  }
  bool operator==(const Usage&) const = default;
};

void to_json(json& j, const Usage& v);
void from_json(const json& j, Usage& v);

enum class ActorKind { agent, consistency, diversify, orchestrator, tool, model };

struct Actor {
  ActorKind kind = ActorKind::orchestrator;
  AgentIndex agent = -1;  // only for ActorKind::agent

  static Actor of_agent(AgentIndex i) { return Actor{ActorKind::agent, i}; }
  std::string str() const;
  static Actor parse(std::string_view s);
  bool operator==(const Actor&) const = default;
};

enum class EventKind {
  request,
  response,
  tool_call,
  tool_result,
  conflict,
  resolution,
  directive,
  belief_update,
  plan_update,
  finalize,
};

std::string_view to_string(EventKind k);
EventKind event_kind_from(std::string_view s);

struct TraceEvent {
  long seq = 0;
  int round = 0;
  Actor actor;
  EventKind kind = EventKind::request;
  json payload;
  long wall_time_ms = 0;
};

/// One JSON line including the schema version and an integrity digest.
std::string serialize_event(const TraceEvent& event);
/// Throws ReplayDivergence when the line is unparseable or its digest does
/// not match its content.
TraceEvent parse_event(std::string_view line);

using Clock = std::chrono::steady_clock;

/// Per-worker staging area for one round's events and token usage.
class TraceBuffer {
 public:
  TraceBuffer(Actor actor, int round, Clock::time_point run_start);

  void emit(EventKind kind, json payload);

  const Actor& actor() const { return actor_; }
  int round() const { return round_; }
  void set_round(int round) { round_ = round; }

  const Usage& usage() const { return usage_; }
  void add_usage(const Usage& u) { usage_ += u; }

  std::vector<TraceEvent> take_events();
  Usage take_usage();

 private:
  Actor actor_;
  int round_;
  Clock::time_point run_start_;
  std::vector<TraceEvent> events_;
  Usage usage_;
};

/// Single sequencer for a run. Optionally streams every event to a JSONL file.
class TraceRecorder {
 public:
  TraceRecorder() = default;
  explicit TraceRecorder(const std::filesystem::path& file);

  void append(TraceEvent event);
  void flush(TraceBuffer& buffer);

  const std::vector<TraceEvent>& events() const { return events_; }

 private:
  std::vector<TraceEvent> events_;
  long next_seq_ = 0;
  std::optional<std::ofstream> out_;
};

std::vector<TraceEvent> load_trace(const std::filesystem::path& file);

/// Sum of usage over all response events.
Usage trace_usage(const std::vector<TraceEvent>& events);

}  // namespace concord

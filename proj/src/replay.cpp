// SPDX-License-Identifier: Apache-2.0
#include "concord/replay.hpp"

#include <fstream>
#include <mutex>

#include <fmt/core.h>

namespace concord {

namespace {

[[noreturn]] void diverge(const std::string& message) {
  throw Error(ErrorCode::replay_divergence, message);
}

json tagless(const TraceEvent& e) {
  return json{{"seq", e.seq},
              {"round", e.round},
              {"actor", e.actor.str()},
              {"kind", to_string(e.kind)},
              {"payload", mask_wall_times(e.payload)}};
}

}  // namespace

void save_record(const std::filesystem::path& file, const RunRecord& record,
                 const Problem& problem) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  json j = record;
  j["problem"] = public_problem_json(problem);
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, fmt::format("cannot write {}", file.string()));
  out << j.dump(2) << '\n';
}

RunRecord load_record(const std::filesystem::path& file, Problem* problem) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot open {}", file.string()));
  try {
    auto j = json::parse(in);
    if (problem) *problem = j.at("problem").get<Problem>();
    return j.get<RunRecord>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::io_error, fmt::format("{}: {}", file.string(), e.what()));
  }
}

ReplayBackend::ReplayBackend(const std::vector<TraceEvent>& events) {
  std::map<std::string, Exchange> pending;
  for (const auto& e : events) {
    if (e.kind == EventKind::request) {
      const auto tag = e.payload.at("tag").get<std::string>();
      pending[tag] = Exchange{e.payload.at("request"), e.payload.value("template", ""), nullptr};
    } else if (e.kind == EventKind::response) {
      const auto tag = e.payload.at("tag").get<std::string>();
      auto it = pending.find(tag);
      if (it == pending.end())
        diverge(fmt::format("response for '{}' without a request", tag));
      it->second.response = e.payload.contains("error")
                                ? json{{"error", e.payload["error"]},
                                       {"message", e.payload.value("message", "")}}
                                : e.payload.at("response");
      exchanges_.insert(*it);
      pending.erase(it);
    }
  }
  if (!pending.empty())
    throw Error(ErrorCode::incomplete_trace,
                fmt::format("request '{}' has no recorded response", pending.begin()->first));
}

ChatResponse ReplayBackend::complete(const ChatRequest& request) {
  auto it = exchanges_.find(request.request_tag);
  if (it == exchanges_.end())
    diverge(fmt::format("regenerated request '{}' is not in the trace", request.request_tag));
  const Exchange& ex = it->second;
  if (json(request) != ex.request || request.template_id != ex.template_id)
    diverge(fmt::format("regenerated request '{}' differs from the recorded one",
                        request.request_tag));
  if (ex.response.contains("error"))
    throw Error(error_code_from(ex.response["error"].get<std::string>()),
                ex.response["message"].get<std::string>());
  return ex.response.get<ChatResponse>();
}

ReplayToolkit::ReplayToolkit(const std::vector<TraceEvent>& events) {
  std::map<std::string, json> pending;
  for (const auto& e : events) {
    if (e.kind == EventKind::tool_call) {
      pending[e.payload.at("tag").get<std::string>()] = e.payload.at("call");
    } else if (e.kind == EventKind::tool_result) {
      const auto tag = e.payload.at("tag").get<std::string>();
      auto it = pending.find(tag);
      if (it == pending.end()) diverge(fmt::format("tool result '{}' without a call", tag));
      calls_[tag] = Recorded{it->second, e.payload.contains("error")
                                             ? json{{"error", e.payload["error"]},
                                                    {"message", e.payload.value("message", "")}}
                                             : e.payload.at("result")};
      pending.erase(it);
    }
  }
  if (!pending.empty())
    throw Error(ErrorCode::incomplete_trace,
                fmt::format("tool call '{}' has no recorded result", pending.begin()->first));
}

ToolResult ReplayToolkit::execute(const ToolCall& call, const std::string&,
                                  const std::string& tag) {
  auto it = calls_.find(tag);
  if (it == calls_.end()) diverge(fmt::format("regenerated tool call '{}' is not in the trace", tag));
  if (json(call) != it->second.call)
    diverge(fmt::format("regenerated tool call '{}' differs from the recorded one", tag));
  const auto& r = it->second.result;
  if (r.contains("error"))
    throw Error(error_code_from(r["error"].get<std::string>()), r["message"].get<std::string>());
  return r.get<ToolResult>();
}

bool events_equivalent(const TraceEvent& a, const TraceEvent& b) {
  return tagless(a) == tagless(b);
}

RunRecord replay_run(const RunFiles& files) {
  const auto events = load_trace(files.trace());
  Problem problem;
  const RunRecord original = load_record(files.record(), &problem);

  auto backend = std::make_shared<ReplayBackend>(events);
  ReplayToolkit toolkit(events);
  TraceRecorder recorder;
  RunContext ctx{backend, toolkit, recorder, original.run_id};
  RunRecord again = run_protocol(problem, original.config, ctx);

  const auto& regenerated = recorder.events();
  const auto n = std::min(regenerated.size(), events.size());
  for (std::size_t i = 0; i < n; ++i)
    if (!events_equivalent(regenerated[i], events[i]))
      diverge(fmt::format("trace event {} differs on replay", events[i].seq));
  if (regenerated.size() != events.size())
    diverge(fmt::format("replay produced {} events, trace has {}", regenerated.size(),
                        events.size()));
  if (mask_wall_times(json(again)) != mask_wall_times(json(original)))
    diverge("replayed run record differs from the stored record");
  return again;
}

}  // namespace concord

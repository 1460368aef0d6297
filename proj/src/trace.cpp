// SPDX-License-Identifier: Apache-2.0
#include "concord/trace.hpp"

#include <fmt/core.h>

#include "concord/errors.hpp"

namespace concord {

namespace {

constexpr std::pair<EventKind, std::string_view> kEventNames[] = {
    {EventKind::request, "request"},         {EventKind::response, "response"},
    {EventKind::tool_call, "tool_call"},     {EventKind::tool_result, "tool_result"},
    {EventKind::conflict, "conflict"},       {EventKind::resolution, "resolution"},
    {EventKind::directive, "directive"},     {EventKind::belief_update, "belief_update"},
    {EventKind::plan_update, "plan_update"}, {EventKind::finalize, "finalize"},
};

std::string digest_of(const json& body) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : body.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

json event_body(const TraceEvent& e) {
  return json{{"v", kTraceSchemaVersion}, {"seq", e.seq},
              {"round", e.round},         {"actor", e.actor.str()},
              {"kind", to_string(e.kind)}, {"payload", e.payload},
              {"wall_time_ms", e.wall_time_ms}};
}

}  // namespace

void to_json(json& j, const Usage& v) {
  j = json{{"prompt_tokens", v.prompt_tokens}, {"completion_tokens", v.completion_tokens}};
}
void from_json(const json& j, Usage& v) {
  v.prompt_tokens = j.value("prompt_tokens", 0L);
  v.completion_tokens = j.value("completion_tokens", 0L);
}

std::string Actor::str() const {
  switch (kind) {
    case ActorKind::agent: return fmt::format("agent:{}", agent);
    case ActorKind::consistency: return "consistency";
    case ActorKind::diversify: return "diversify";
    case ActorKind::orchestrator: return "orchestrator";
    case ActorKind::tool: return "tool";
    case ActorKind::model: return "model";
  }
  return "?";
}

Actor Actor::parse(std::string_view s) {
  if (s.rfind("agent:", 0) == 0) return of_agent(std::stoi(std::string(s.substr(6))));
  if (s == "consistency") return {ActorKind::consistency};
  if (s == "diversify") return {ActorKind::diversify};
  if (s == "orchestrator") return {ActorKind::orchestrator};
  if (s == "tool") return {ActorKind::tool};
  if (s == "model") return {ActorKind::model};
  throw Error(ErrorCode::invalid_argument, fmt::format("unknown actor '{}'", s));
}

std::string_view to_string(EventKind k) {
  for (const auto& [v, n] : kEventNames)
    if (v == k) return n;
  return "?";
}

EventKind event_kind_from(std::string_view s) {
  for (const auto& [v, n] : kEventNames)
    if (n == s) return v;
  throw Error(ErrorCode::invalid_argument, fmt::format("unknown event kind '{}'", s));
}

std::string serialize_event(const TraceEvent& event) {
  json body = event_body(event);
  body["digest"] = digest_of(body);
  return body.dump();
}

TraceEvent parse_event(std::string_view line) {
  json body;
  try {
    body = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::replay_divergence, fmt::format("unparseable trace line: {}", e.what()));
  }
  try {
    if (!body.is_object() || !body.contains("digest"))
      throw Error(ErrorCode::replay_divergence, "trace line without digest");
    auto digest = body["digest"].get<std::string>();
    body.erase("digest");
    if (digest != digest_of(body))
      throw Error(ErrorCode::replay_divergence,
                  fmt::format("trace event {} does not match its digest", body.value("seq", -1L)));
    TraceEvent e;
    e.seq = body.at("seq").get<long>();
    e.round = body.at("round").get<int>();
    e.actor = Actor::parse(body.at("actor").get<std::string>());
    e.kind = event_kind_from(body.at("kind").get<std::string>());
    e.payload = body.at("payload");
    e.wall_time_ms = body.at("wall_time_ms").get<long>();
    return e;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::replay_divergence, fmt::format("malformed trace event: {}", e.what()));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::replay_divergence) throw;
    throw Error(ErrorCode::replay_divergence, e.what());
  }
}

TraceBuffer::TraceBuffer(Actor actor, int round, Clock::time_point run_start)
    : actor_(actor), round_(round), run_start_(run_start) {}

void TraceBuffer::emit(EventKind kind, json payload) {
  TraceEvent e;
  e.round = round_;
  e.actor = actor_;
  e.kind = kind;
  e.payload = std::move(payload);
  e.wall_time_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - run_start_).count();
  events_.push_back(std::move(e));
}

std::vector<TraceEvent> TraceBuffer::take_events() { return std::exchange(events_, {}); }

Usage TraceBuffer::take_usage() { return std::exchange(usage_, {}); }

TraceRecorder::TraceRecorder(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  out_.emplace(file, std::ios::out | std::ios::trunc);
  if (!*out_) throw Error(ErrorCode::io_error, fmt::format("cannot write {}", file.string()));
}

void TraceRecorder::append(TraceEvent event) {
  event.seq = next_seq_++;
  if (out_) {
    *out_ << serialize_event(event) << '\n';
    out_->flush();
  }
  events_.push_back(std::move(event));
}

void TraceRecorder::flush(TraceBuffer& buffer) {
  for (auto& e : buffer.take_events()) append(std::move(e));
}

std::vector<TraceEvent> load_trace(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot open trace {}", file.string()));
  std::vector<TraceEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    events.push_back(parse_event(line));
  }
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].seq <= events[i - 1].seq)
      throw Error(ErrorCode::replay_divergence, "trace sequence numbers are not increasing");
  return events;
}

Usage trace_usage(const std::vector<TraceEvent>& events) {
  Usage total;
  for (const auto& e : events)
    if (e.kind == EventKind::response && e.payload.contains("usage"))
      total += e.payload["usage"].get<Usage>();
  return total;
}

}  // namespace concord

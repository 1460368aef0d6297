// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>

#include "concord/trace.hpp"
#include "support.hpp"

using namespace concord;

TEST_SUITE("trace") {

TEST_CASE("event lines round trip") {
  TraceEvent e;
  e.seq = 4;
  e.round = 2;
  e.actor = Actor::of_agent(3);
  e.kind = EventKind::belief_update;
  e.payload = json{{"added", json::array({"x"})}};
  e.wall_time_ms = 17;
  const auto line = serialize_event(e);
  CHECK(json::parse(line)["v"] == kTraceSchemaVersion);
  auto back = parse_event(line);
  CHECK(back.seq == 4);
  CHECK(back.actor == Actor::of_agent(3));
  CHECK(back.kind == EventKind::belief_update);
  CHECK(back.payload == e.payload);
  CHECK(back.wall_time_ms == 17);
}

TEST_CASE("a changed byte breaks the digest") {
  TraceEvent e;
  e.payload = json{{"text", "The answer is 96"}};
  auto line = serialize_event(e);
  auto pos = line.find("96");
  line[pos] = '7';
  CHECK_THROWS_WITH_AS(parse_event(line), doctest::Contains("digest"), Error);
  CHECK_THROWS_AS(parse_event("{not json"), Error);
  CHECK_THROWS_AS(parse_event(R"({"seq":1})"), Error);
}

TEST_CASE("actors and kinds parse back") {
  for (auto a : {Actor::of_agent(0), Actor{ActorKind::consistency}, Actor{ActorKind::diversify},
                 Actor{ActorKind::orchestrator}, Actor{ActorKind::tool}, Actor{ActorKind::model}})
    CHECK(Actor::parse(a.str()) == a);
  CHECK(event_kind_from("plan_update") == EventKind::plan_update);
  CHECK_THROWS_AS(event_kind_from("gossip"), Error);
}

TEST_CASE("recorder sequences buffers in flush order") {
  const auto start = Clock::now();
  TraceBuffer b0(Actor::of_agent(0), 1, start), b1(Actor::of_agent(1), 1, start);
  b1.emit(EventKind::request, json::object());
  b0.emit(EventKind::request, json::object());
  b0.emit(EventKind::response, json::object());
  TraceRecorder rec;
  rec.flush(b0);
  rec.flush(b1);
  const auto& ev = rec.events();
  REQUIRE(ev.size() == 3);
  CHECK(ev[0].seq == 0);
  CHECK(ev[2].seq == 2);
  CHECK(ev[2].actor == Actor::of_agent(1));
}

TEST_CASE("file recorder and loader agree") {
  auto dir = testing::temp_dir("trace");
  auto backend = testing::planted_backend();
  testing::FakeToolkit tools;
  auto record = testing::run_to_disk(testing::planted_problem(), testing::planted_config(), backend,
                                     tools, dir, "planted");
  auto events = load_trace(RunFiles{dir}.trace());
  CHECK(events.size() > 50);
  CHECK(trace_usage(events) == record.usage);
  CHECK(testing::barrier_violations(events) == 0);

  // Every request has a response with the same tag, right after it.
  int requests = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].kind != EventKind::request) continue;
    ++requests;
    REQUIRE(i + 1 < events.size());
    CHECK(events[i + 1].kind == EventKind::response);
    CHECK(events[i + 1].payload["tag"] == events[i].payload["tag"]);
  }
  CHECK(requests > 10);
}

TEST_CASE("loader rejects out of order sequence numbers") {
  auto dir = testing::temp_dir("trace");
  std::ofstream out(dir / "t.jsonl");
  TraceEvent a, b;
  a.seq = 5;
  b.seq = 3;
  out << serialize_event(a) << "\n" << serialize_event(b) << "\n";
  out.close();
  CHECK_THROWS_AS(load_trace(dir / "t.jsonl"), Error);
  CHECK_THROWS_AS(load_trace(dir / "missing.jsonl"), Error);
}

}  // TEST_SUITE

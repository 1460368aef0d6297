// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <regex>
#include <set>

#include <fmt/core.h>

namespace concord::testing {

namespace fs = std::filesystem;

ToolResult FakeToolkit::execute(const ToolCall& call, const std::string& sandbox,
                                const std::string& tag) {
  {
    std::lock_guard guard(mutex_);
    calls_.push_back(Call{call, sandbox, tag});
  }
  if (fault_) throw Error(*fault_, "injected tool fault");
  const auto args = json::parse(call.arguments);
  ToolResult r{true, "ok", 1};
  if (call.name == ToolName::run_code) {
    static const std::regex product(R"(print\((\d+)\s*\*\s*(\d+)\))");
    static const std::regex number(R"(print\((\d+)\))");
    const auto code = args.at("code").get<std::string>();
    std::smatch m;
    if (std::regex_search(code, m, product))
      r.output = std::to_string(std::stol(m[1]) * std::stol(m[2]));
    else if (std::regex_search(code, m, number))
      r.output = m[1];
  } else if (call.name == ToolName::web_search) {
    r.output = "1. Example result";
  }
  return r;
}

std::vector<FakeToolkit::Call> FakeToolkit::calls() const {
  std::lock_guard guard(mutex_);
  return calls_;
}

ScriptRule text_rule(const std::string& tag_regex, const std::string& text) {
  return rule_text(tag_regex, text);
}

ScriptRule tool_rule(const std::string& tag_regex, const std::string& code) {
  return rule_tool(tag_regex, "run_code", json{{"code", code}});
}

// ---------------------------------------------------------------------------

std::string sample_conflict_block() {
  return "conflict:\n"
         "  agents: [1, 2]\n"
         "  description: |\n"
         "    Agents disagree on the largest two-digit number\n"
         "    divisible by both 6 and 8. Agent 1 identifies 96;\n"
         "    Agent 2 identifies 72.\n"
         "  claims:\n"
         "    agent_1: \"96\"\n"
         "    agent_2: \"72\"\n";
}

std::string sample_resolution_block() {
  return "resolution:\n"
         "  agents: [1, 2]\n"
         "  description: |\n"
         "    Agents disagree on the largest two-digit number\n"
         "    divisible by both 6 and 8.\n"
         "  claims:\n"
         "    agent_1: \"96\"\n"
         "    agent_2: \"72\"\n"
         "  correct_claim: \"96\"\n"
         "  reason: |\n"
         "    Both 96 and 72 are divisible by 6 and 8 (verified\n"
         "    by Python). Since 96 > 72, 96 is the largest.\n"
         "    Agent 2 stopped its search prematurely.\n";
}

std::string sample_directive_block() {
  return "directive:\n"
         "  target_agent_index: 1\n"
         "  modification_instruction: |\n"
         "    Instead of iterating downward from 100, compute the\n"
         "    set of all positive integers less than 100 that are\n"
         "    divisible by 6, then filter for those also divisible\n"
         "    by 8, and return the maximum of the resulting set.\n";
}

Problem planted_problem() {
  Problem p;
  p.id = "lcm-96";
  p.statement =
      "What is the largest two-digit number that is divisible by both 6 and 8? Give the number.";
  p.reference_answer = "96";
  p.reference_solution = "LCM(6, 8) = 24. The two-digit multiples of 24 are 24, 48, 72, 96, so "
                         "the answer is 96.";
  return p;
}

namespace {

std::string plan_block(const std::vector<std::string>& tasks) {
  std::string out = "plan:\n";
  for (const auto& t : tasks) out += "  - " + t + "\n";
  return out;
}

std::string findings_block(const std::vector<std::string>& findings) {
  std::string out = "findings:\n";
  for (const auto& f : findings) out += "  - \"" + f + "\"\n";
  return out;
}

constexpr std::string_view kReplanDone = "replan:\n  status: done\n";

}  // namespace

std::shared_ptr<ScriptedBackend> planted_backend() {
  auto b = std::make_shared<ScriptedBackend>();
  const std::vector<std::vector<std::string>> plans{
      {"Factor 6 and 8 into primes", "Derive the least common multiple from the factors",
       "Scan two-digit multiples of the least common multiple"},
      {"Compute LCM(6, 8) with the interpreter", "Find the largest two-digit multiple of the LCM",
       "State the verified answer"},
      {"Compute the LCM of 6 and 8", "Search multiples of the LCM below 100",
       "Report the final number"},
      {"List divisors of 6 and 8", "Combine divisors into a common multiple",
       "Confirm the candidate against the statement"},
  };
  // Round-2 conclusions: agents 1 and 2 disagree; 0 and 3 are still at the LCM.
  const std::vector<std::string> round2{
      "From 6 = 2*3 and 8 = 2^3 the least common multiple is 24.",
      "The largest two-digit multiple of 24 is 96, since 24*4 = 96.",
      "The largest two-digit multiple of 24 is 72, since 24*3 = 72.",
      "Combining 2^3 and 3 gives the common multiple 24.",
  };
  const std::vector<std::string> round2_findings{
      "LCM(6, 8) = 24 from prime factors", "The largest two-digit number divisible by 6 and 8 is 96",
      "The largest two-digit number divisible by 6 and 8 is 72", "24 is a common multiple of 6 and 8"};
  const std::vector<std::string> round3{
      "Multiples of 24 below 100 are 24, 48, 72, 96; the largest is 96.",
      "Verified again: the answer is 96.",
      "The external note says 96; 24*4 = 96 is two-digit and exceeds 72, so the answer is 96.",
      "96 is divisible by 6 and by 8 and is the largest such two-digit number.",
  };
  for (int i = 0; i < 4; ++i) {
    const auto a = fmt::format("a{}", i);
    b->add(text_rule(a + R"(\.r0\.init)", plan_block(plans[i])));
    b->add(text_rule(a + R"(\.r1\.select)", "selected_task: t1"));
    b->add(text_rule(a + R"(\.r2\.select)", "selected_task: t2"));
    b->add(tool_rule(a + R"(\.r1\.exec\.0)", "print(24)"));
    b->add(text_rule(a + R"(\.r1\.exec\.1)", "The least common multiple of 6 and 8 is 24."));
    b->add(text_rule(a + R"(\.r1\.update)", findings_block({"LCM(6, 8) = 24"})));
    b->add(tool_rule(a + R"(\.r2\.exec\.0)", i == 2 ? "print(24*3)" : "print(24*4)"));
    b->add(text_rule(a + R"(\.r2\.exec\.1)", round2[i]));
    b->add(text_rule(a + R"(\.r2\.update)", findings_block({round2_findings[i]})));
    b->add(text_rule(a + R"(\.r3\.exec\.0)", round3[i]));
    b->add(text_rule(a + R"(\.r3\.update)", findings_block({"The answer is 96"})));
    b->add(text_rule(a + R"(\.r\d+\.replan)", std::string(kReplanDone)));
    b->add(text_rule(a + R"(\.r\d+\.final)", "final_answer: \"96\""));
  }
  b->add(text_rule(R"(consistency\.r2\.extract)", sample_conflict_block()));
  b->add(text_rule(R"(consistency\.r\d+\.extract)", "conflicts: []"));
  b->add(tool_rule(R"(consistency\.r2\.resolve\.0)",
                   "print(96 % 6, 96 % 8, 72 % 6, 72 % 8)"));
  b->add(text_rule(R"(consistency\.r2\.resolve\.1)", sample_resolution_block()));
  b->add(text_rule(R"(diversify\.r\d+\.analyze)", "directives: []"));
  b->set_default(text_response("I am not sure."));
  return b;
}

ProtocolConfig make_config(Protocol protocol, int n_agents) {
  ProtocolConfig c;
  c.protocol = protocol;
  c.n_agents = n_agents;
  c.seed = 7;
  c.budgets.max_rounds = 8;
  c.budgets.max_react_steps_per_task = 4;
  c.budgets.max_tokens = 5'000'000;
  return c;
}

ProtocolConfig planted_config() { return make_config(Protocol::excomm, 4); }

// ---------------------------------------------------------------------------

Problem toy_problem(const std::string& id) {
  Problem p;
  p.id = id;
  p.statement = "Compute the product of the agent-specific factors and report 96.";
  p.reference_answer = "96";
  p.reference_solution = "Every path leads to 96.";
  return p;
}

std::string toy_task_text(int agent, int task) {
  static const char* verbs[] = {"Examine", "Tabulate", "Cross-check", "Summarize", "Bound"};
  return fmt::format("{} residue class {} for branch {}-{}", verbs[(agent + task) % 5],
                     agent * 10 + task, agent, task);
}

std::shared_ptr<ScriptedBackend> toy_backend(const ToyOptions& o) {
  auto backend = std::make_shared<ScriptedBackend>();
  // Every scripted answer takes `delay_ms`, which makes agent-level
  // parallelism observable in wall time.
  struct Delayed {
    ScriptedBackend& target;
    int delay_ms;
    void add(ScriptRule r) {
      r.delay_ms = delay_ms;
      target.add(std::move(r));
    }
    void set_default(ChatResponse r) { target.set_default(std::move(r)); }
  } delayed{*backend, o.delay_ms};
  auto* b = &delayed;
  for (int i = 0; i < o.n_agents; ++i) {
    const auto a = fmt::format("a{}", i);
    std::vector<std::string> tasks;
    for (int k = 1; k <= o.tasks; ++k) tasks.push_back(toy_task_text(i, k));
    b->add(text_rule(a + R"(\.r0\.init)", plan_block(tasks)));
    for (int r = 1; r <= 12; ++r) {
      const auto ar = fmt::format("{}\\.r{}", a, r);
      b->add(text_rule(ar + R"(\.select)", fmt::format("selected_task: t{}", r)));
      b->add(tool_rule(ar + R"(\.exec\.0)", fmt::format("print({}*{})", i + 2, r + 3)));
      b->add(text_rule(ar + R"(\.exec\.1)",
                       fmt::format("Branch {} step {} computed {} from the factors {} and {}.", i,
                                   r, (i + 2) * (r + 3), i + 2, r + 3)));
      b->add(text_rule(ar + R"(\.update)",
                       findings_block({fmt::format("value_{}_{} = {}", i, r, (i + 2) * (r + 3))})));
    }
    b->add(text_rule(a + R"(\.r\d+\.replan)", std::string(kReplanDone)));
    b->add(text_rule(a + R"(\.r\d+\.revise)",
                     "revision:\n  findings:\n    - \"rechecked the running values\"\n"));
    b->add(text_rule(a + R"(\.r\d+\.final)",
                     fmt::format("final_answer: \"{}\"", i % 3 == 1 ? "72" : "96")));
  }
  if (o.conflict_round > 0) {
    b->add(text_rule(fmt::format(R"(consistency\.r{}\.extract)", o.conflict_round),
                     "conflicts:\n"
                     "  - agents: [0, 1]\n"
                     "    description: Agents disagree on the shared intermediate value X\n"
                     "    claims:\n"
                     "      agent_0: \"X = 5\"\n"
                     "      agent_1: \"X = 7\"\n"));
    b->add(tool_rule(fmt::format(R"(consistency\.r{}\.resolve\.0)", o.conflict_round),
                     "print(5)"));
    b->add(text_rule(fmt::format(R"(consistency\.r{}\.resolve\.1)", o.conflict_round),
                     "resolutions:\n"
                     "  - agents: [0, 1]\n"
                     "    description: Agents disagree on the shared intermediate value X\n"
                     "    claims:\n"
                     "      agent_0: \"X = 5\"\n"
                     "      agent_1: \"X = 7\"\n"
                     "    correct_claim: \"X = 5\"\n"
                     "    justification: Direct evaluation prints 5.\n"));
  }
  b->add(text_rule(R"(consistency\.r\d+\.extract)", "conflicts: []"));
  if (o.directive_round > 0) {
    b->add(text_rule(fmt::format(R"(diversify\.r{}\.analyze)", o.directive_round),
                     fmt::format("directives:\n"
                                 "  - target_agent_index: {}\n"
                                 "    modification_instruction: Switch branch {} to a set-based "
                                 "filter over all residues\n",
                                 o.n_agents - 1, o.n_agents - 1)));
  }
  b->add(text_rule(R"(diversify\.r\d+\.analyze)", "directives: []"));
  b->set_default(text_response("I am not sure."));
  return backend;
}

// ---------------------------------------------------------------------------

RunResult run_in_memory(const Problem& problem, const ProtocolConfig& config,
                        std::shared_ptr<Backend> backend, Toolkit& toolkit,
                        const std::string& run_id) {
  TraceRecorder recorder;
  RunContext ctx{std::move(backend), toolkit, recorder, run_id};
  RunResult out;
  out.record = run_protocol(problem, config, ctx);
  out.events = recorder.events();
  return out;
}

RunRecord run_to_disk(const Problem& problem, const ProtocolConfig& config,
                      std::shared_ptr<Backend> backend, Toolkit& toolkit, const fs::path& dir,
                      const std::string& run_id) {
  RunFiles files{dir};
  RunRecord record;
  {
    TraceRecorder recorder(files.trace());
    RunContext ctx{std::move(backend), toolkit, recorder, run_id};
    record = run_protocol(problem, config, ctx);
  }
  save_record(files.record(), record, problem);
  return record;
}

fs::path temp_dir(const std::string& name) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = fs::temp_directory_path() / fmt::format("concord-test-{}-{:x}", name, rng());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string marker(int agent, int round) { return fmt::format("MK{}R{}X", agent, round); }

RunRecord marked_record(int n_agents, int rounds, unsigned seed) {
  std::mt19937 rng(seed);
  RunRecord record;
  record.run_id = fmt::format("marked-{}", seed);
  record.problem_id = "marked";
  record.config = make_config(Protocol::excomm, n_agents);
  for (int i = 0; i < n_agents; ++i) {
    AgentTrajectory t;
    t.index = i;
    AgentState& s = t.final_state;
    s.index = i;
    s.belief = BeliefState::initial("Shared problem statement");
    s.plan = make_plan({fmt::format("initial task of agent {}", i)}, TaskOrigin::initial, 0);
    // Agents may skip rounds (finished early or failed), like real runs.
    const int last = std::uniform_int_distribution<int>(1, rounds)(rng);
    for (int r = 1; r <= last; ++r) {
      const auto m = marker(i, r);
      s.plan = plan_replace_pending(s.plan, {"follow-up " + m}, TaskOrigin::replan, r);
      RoundStep step;
      step.round = r;
      step.task_id = fmt::format("t{}", r);
      step.task_description = "work on " + m;
      step.log.task_id = step.task_id;
      step.log.steps.push_back(ExecutionStep{"thinking about " + m, {}, {}});
      if (rng() % 2)
        step.log.steps.push_back(ExecutionStep{
            "", ToolCall{ToolName::run_code, json{{"code", "print('" + m + "')"}}.dump()},
            ToolResult{true, m, 1}});
      step.log.outcome = ExecutionOutcome::completed;
      s.belief = belief_append(s.belief, r, BeliefOrigin::execution, "claim " + m);
      if (rng() % 3 == 0)
        s.belief = belief_append(s.belief, r, BeliefOrigin::soft_update, "note " + m);
      step.findings.push_back("claim " + m);
      step.belief_size = s.belief.size();
      step.plan = s.plan;
      t.steps.push_back(std::move(step));
    }
    s.terminated = true;
    s.final_answer = i % 2 ? "72" : "96";
    record.final_answers.push_back(*s.final_answer);
    record.agents.push_back(std::move(t));
  }
  record.rounds = rounds;
  return record;
}

// ---------------------------------------------------------------------------

std::string request_text(const TraceEvent& event) {
  std::string out;
  if (event.kind != EventKind::request) return out;
  for (const auto& m : event.payload.at("request").at("messages"))
    out += m.at("content").get<std::string>() + "\n";
  return out;
}

int barrier_violations(const std::vector<TraceEvent>& events) {
  std::map<int, long> agent_max, agent_min, module_min, module_max;
  for (const auto& e : events) {
    const bool agent = e.actor.kind == ActorKind::agent;
    const bool module =
        e.actor.kind == ActorKind::consistency || e.actor.kind == ActorKind::diversify;
    if (agent) {
      agent_max[e.round] = std::max(agent_max.count(e.round) ? agent_max[e.round] : e.seq, e.seq);
      agent_min[e.round] = std::min(agent_min.count(e.round) ? agent_min[e.round] : e.seq, e.seq);
    } else if (module) {
      module_min[e.round] =
          std::min(module_min.count(e.round) ? module_min[e.round] : e.seq, e.seq);
      module_max[e.round] =
          std::max(module_max.count(e.round) ? module_max[e.round] : e.seq, e.seq);
    }
  }
  int violations = 0;
  for (const auto& [round, mmin] : module_min)
    if (agent_max.count(round) && agent_max[round] >= mmin) ++violations;
  for (const auto& [round, amin] : agent_min) {
    if (agent_max.count(round - 1) && agent_max[round - 1] >= amin) ++violations;
    if (module_max.count(round - 1) && module_max[round - 1] >= amin) ++violations;
  }
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].seq <= events[i - 1].seq) ++violations;
  return violations;
}

int resolver_isolation_violations(const std::vector<TraceEvent>& events,
                                  const RunRecord& record) {
  std::vector<std::string> beliefs;
  for (const auto& a : record.agents) {
    const auto& entries = a.final_state.belief.entries();
    for (std::size_t k = 1; k <= entries.size(); ++k)
      beliefs.push_back(belief_render(BeliefState::from_entries(
          std::vector<BeliefEntry>(entries.begin(), entries.begin() + static_cast<long>(k)))));
  }
  int violations = 0;
  for (const auto& e : events) {
    if (e.kind != EventKind::request || e.actor.kind != ActorKind::consistency) continue;
    const auto tag = e.payload.at("tag").get<std::string>();
    if (tag.find(".resolve.") == std::string::npos) continue;
    const auto text = request_text(e);
    for (const auto& b : beliefs)
      if (text.find(b) != std::string::npos) ++violations;
  }
  return violations;
}

int plan_isolation_violations(const std::vector<TraceEvent>& events) {
  std::map<std::string, std::set<AgentIndex>> owners;
  for (const auto& e : events) {
    if (e.kind != EventKind::plan_update) continue;
    AgentIndex owner = e.actor.kind == ActorKind::agent ? e.actor.agent
                                                        : e.payload.value("agent", -1);
    if (owner < 0) continue;
    for (const auto& t : e.payload.at("plan"))
      owners[t.at("description").get<std::string>()].insert(owner);
  }
  int violations = 0;
  for (const auto& e : events) {
    if (e.kind != EventKind::request || e.actor.kind != ActorKind::agent) continue;
    const auto text = request_text(e);
    for (const auto& [desc, who] : owners) {
      if (who.size() != 1 || who.count(e.actor.agent)) continue;
      if (text.find(desc) != std::string::npos) ++violations;
    }
  }
  return violations;
}

}  // namespace concord::testing

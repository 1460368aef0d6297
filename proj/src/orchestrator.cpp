// SPDX-License-Identifier: Apache-2.0
#include "concord/orchestrator.hpp"

#include <exception>

#include <fmt/core.h>

namespace concord {

namespace {

constexpr std::pair<Protocol, std::string_view> kProtocolNames[] = {
    {Protocol::base_agent, "base_agent"},
    {Protocol::sequential_revision, "sequential_revision"},
    {Protocol::independent, "independent"},
    {Protocol::independent_sr, "independent_sr"},
    {Protocol::excomm, "excomm"},
};

constexpr std::pair<AgentStatus, std::string_view> kAgentStatusNames[] = {
    {AgentStatus::finished, "finished"},
    {AgentStatus::init_failed, "init_failed"},
    {AgentStatus::failed, "failed"},
};

constexpr std::pair<RunStatus, std::string_view> kRunStatusNames[] = {
    {RunStatus::completed, "completed"},
    {RunStatus::budget_exhausted, "budget_exhausted"},
    {RunStatus::failed, "failed"},
};

template <typename E, std::size_t N>
E enum_from(const std::pair<E, std::string_view> (&names)[N], std::string_view s,
            std::string_view what) {
  for (const auto& [v, n] : names)
    if (n == s) return v;
  throw Error(ErrorCode::config_error, fmt::format("unknown {} '{}'", what, s));
}

template <typename E, std::size_t N>
std::string_view enum_name(const std::pair<E, std::string_view> (&names)[N], E v) {
  for (const auto& [k, n] : names)
    if (k == v) return n;
  return "?";
}

bool uses_revision(Protocol p) {
  return p == Protocol::sequential_revision || p == Protocol::independent_sr;
}

bool due(int round, int period) { return period > 0 && round % period == 0; }

// Outcome of one agent worker for one round.
struct WorkerResult {
  std::optional<AgentState> state;
  std::optional<AgentStepResult> step;
  bool budget_hit = false;
  std::string error;
};

template <typename Fn>
void for_agents(const std::vector<AgentIndex>& ids, bool parallel, Fn&& fn) {
  const long n = static_cast<long>(ids.size());
#pragma omp parallel for schedule(dynamic) if (parallel && n > 1)
  for (long k = 0; k < n; ++k) fn(ids[static_cast<std::size_t>(k)]);
}

}  // namespace

std::string_view to_string(Protocol p) { return enum_name(kProtocolNames, p); }
Protocol protocol_from(std::string_view s) { return enum_from(kProtocolNames, s, "protocol"); }
std::string_view to_string(RunStatus s) { return enum_name(kRunStatusNames, s); }

ProtocolConfig normalize_config(ProtocolConfig config) {
  if (config.protocol == Protocol::base_agent || config.protocol == Protocol::sequential_revision)
    config.n_agents = 1;
  if (config.n_agents < 1) throw Error(ErrorCode::config_error, "n_agents must be positive");
  if (config.protocol == Protocol::excomm && config.n_agents < 2)
    throw Error(ErrorCode::config_error, "excomm requires at least two agents");
  try {
    validate_budget(config.budgets);
  } catch (const Error& e) {
    throw Error(ErrorCode::config_error, e.detail());
  }
  if (config.consistency.period < 1 || config.diversify.period < 1)
    throw Error(ErrorCode::config_error, "module periods must be positive");
  if (config.consistency.resolver_tool_budget < 0)
    throw Error(ErrorCode::config_error, "resolver_tool_budget must be non-negative");
  return config;
}

void to_json(json& j, const ProtocolConfig& v) {
  j = json{{"protocol", to_string(v.protocol)},
           {"n_agents", v.n_agents},
           {"seed", v.seed},
           {"parallel_agents", v.parallel_agents},
           {"budgets",
            {{"max_rounds", v.budgets.max_rounds},
             {"max_react_steps_per_task", v.budgets.max_react_steps_per_task},
             {"max_tokens", v.budgets.max_tokens}}},
           {"consistency",
            {{"enabled", v.consistency.enabled},
             {"period", v.consistency.period},
             {"resolver_tool_budget", v.consistency.resolver_tool_budget},
             {"update_mode", to_string(v.consistency.update_mode)}}},
           {"diversify", {{"enabled", v.diversify.enabled}, {"period", v.diversify.period}}},
           {"sampling",
            {{"solver_temperature", v.sampling.solver_temperature},
             {"module_temperature", v.sampling.module_temperature},
             {"max_output_tokens", v.sampling.max_output_tokens}}}};
}

void from_json(const json& j, ProtocolConfig& v) {
  ProtocolConfig d;
  v.protocol = protocol_from(j.value("protocol", std::string(to_string(d.protocol))));
  v.n_agents = j.value("n_agents", d.n_agents);
  v.seed = j.value("seed", d.seed);
  v.parallel_agents = j.value("parallel_agents", d.parallel_agents);
  const auto b = j.value("budgets", json::object());
  v.budgets.max_rounds = b.value("max_rounds", d.budgets.max_rounds);
  v.budgets.max_react_steps_per_task =
      b.value("max_react_steps_per_task", d.budgets.max_react_steps_per_task);
  v.budgets.max_tokens = b.value("max_tokens", d.budgets.max_tokens);
  const auto c = j.value("consistency", json::object());
  v.consistency.enabled = c.value("enabled", d.consistency.enabled);
  v.consistency.period = c.value("period", d.consistency.period);
  v.consistency.resolver_tool_budget =
      c.value("resolver_tool_budget", d.consistency.resolver_tool_budget);
  v.consistency.update_mode = update_mode_from(c.value("update_mode", std::string("soft")));
  const auto dv = j.value("diversify", json::object());
  v.diversify.enabled = dv.value("enabled", d.diversify.enabled);
  v.diversify.period = dv.value("period", d.diversify.period);
  const auto s = j.value("sampling", json::object());
  v.sampling.solver_temperature = s.value("solver_temperature", d.sampling.solver_temperature);
  v.sampling.module_temperature = s.value("module_temperature", d.sampling.module_temperature);
  v.sampling.max_output_tokens = s.value("max_output_tokens", d.sampling.max_output_tokens);
}

void to_json(json& j, const RoundStep& v) {
  j = json{{"round", v.round},
           {"task_id", v.task_id},
           {"task_description", v.task_description},
           {"log", v.log},
           {"findings", v.findings},
           {"belief_size", v.belief_size},
           {"plan", v.plan}};
}

void from_json(const json& j, RoundStep& v) {
  v.round = j.at("round").get<int>();
  v.task_id = j.at("task_id").get<std::string>();
  v.task_description = j.at("task_description").get<std::string>();
  v.log = j.at("log").get<ExecutionLog>();
  v.findings = j.at("findings").get<std::vector<std::string>>();
  v.belief_size = j.at("belief_size").get<std::size_t>();
  v.plan = j.at("plan").get<Plan>();
}

void to_json(json& j, const AgentTrajectory& v) {
  j = json{{"index", v.index},
           {"status", enum_name(kAgentStatusNames, v.status)},
           {"error", v.error},
           {"steps", v.steps},
           {"final_state", v.final_state}};
}

void from_json(const json& j, AgentTrajectory& v) {
  v.index = j.at("index").get<int>();
  v.status = enum_from(kAgentStatusNames, j.at("status").get<std::string>(), "agent status");
  v.error = j.at("error").get<std::string>();
  v.steps = j.at("steps").get<std::vector<RoundStep>>();
  v.final_state = j.at("final_state").get<AgentState>();
}

static json int_map_json(const std::map<AgentIndex, int>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[std::to_string(k)] = v;
  return out;
}

void to_json(json& j, const ModuleRound& v) {
  j = json{{"round", v.round},
           {"conflicts", v.conflicts},
           {"resolutions", v.resolutions},
           {"directives", v.directives},
           {"belief_updates", int_map_json(v.belief_updates)}};
}

void from_json(const json& j, ModuleRound& v) {
  v.round = j.at("round").get<int>();
  v.conflicts = j.at("conflicts").get<std::vector<Conflict>>();
  v.resolutions = j.at("resolutions").get<std::vector<Resolution>>();
  v.directives = j.at("directives").get<std::vector<Directive>>();
  v.belief_updates.clear();
  for (auto it = j.at("belief_updates").begin(); it != j.at("belief_updates").end(); ++it)
    v.belief_updates[std::stoi(it.key())] = it.value().get<int>();
}

void to_json(json& j, const RunRecord& v) {
  j = json{{"run_id", v.run_id},
           {"problem_id", v.problem_id},
           {"config", v.config},
           {"agents", v.agents},
           {"final_answers", v.final_answers},
           {"aggregated_answer", v.aggregated_answer},
           {"aggregated_display", v.aggregated_display},
           {"usage", v.usage},
           {"wall_time_ms", v.wall_time_ms},
           {"rounds", v.rounds},
           {"status", to_string(v.status)},
           {"modules", v.modules}};
}

void from_json(const json& j, RunRecord& v) {
  v.run_id = j.at("run_id").get<std::string>();
  v.problem_id = j.at("problem_id").get<std::string>();
  v.config = j.at("config").get<ProtocolConfig>();
  v.agents = j.at("agents").get<std::vector<AgentTrajectory>>();
  v.final_answers = j.at("final_answers").get<std::vector<std::string>>();
  v.aggregated_answer = j.at("aggregated_answer").get<std::string>();
  v.aggregated_display = j.at("aggregated_display").get<std::string>();
  v.usage = j.at("usage").get<Usage>();
  v.wall_time_ms = j.value("wall_time_ms", 0L);
  v.rounds = j.at("rounds").get<int>();
  v.status = enum_from(kRunStatusNames, j.at("status").get<std::string>(), "run status");
  v.modules = j.at("modules").get<std::vector<ModuleRound>>();
}

// ---------------------------------------------------------------------------

RunRecord run_protocol(const Problem& problem, const ProtocolConfig& raw_config, RunContext& ctx) {
  const ProtocolConfig config = normalize_config(raw_config);
  const auto run_start = Clock::now();
  const int n = config.n_agents;
  ModelClient client(ctx.backend, config.budgets.max_tokens);

  RunRecord record;
  record.run_id = ctx.run_id;
  record.problem_id = problem.id;
  record.config = config;
  record.agents.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) record.agents[i].index = i;

  std::vector<std::optional<AgentState>> states(static_cast<std::size_t>(n));
  bool budget_hit = false;

  auto sandbox_for = [&](const std::string& name) {
    return ctx.run_id.empty() ? name : ctx.run_id + "/" + name;
  };
  auto agent_context = [&](AgentIndex i, TraceBuffer& sink) {
    return AgentContext{problem,
                        client,
                        ctx.toolkit,
                        sink,
                        i,
                        config.budgets,
                        config.sampling.solver_temperature,
                        config.seed + i,
                        sandbox_for(fmt::format("agent{}", i)),
                        config.sampling.max_output_tokens};
  };
  // Flushes worker buffers in agent order and commits their usage.
  auto barrier = [&](std::vector<TraceBuffer>& buffers) {
    for (auto& b : buffers) {
      client.commit(b.take_usage());
      ctx.recorder.flush(b);
    }
  };
  auto flush_one = [&](TraceBuffer& b) {
    client.commit(b.take_usage());
    ctx.recorder.flush(b);
  };

  // Round 0: initialization.
  {
    std::vector<AgentIndex> ids;
    std::vector<TraceBuffer> buffers;
    std::vector<WorkerResult> results(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      ids.push_back(i);
      buffers.emplace_back(Actor::of_agent(i), 0, run_start);
    }
    for_agents(ids, config.parallel_agents, [&](AgentIndex i) {
      auto& r = results[i];
      try {
        auto ac = agent_context(i, buffers[i]);
        r.state = initialize_agent(ac);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::budget_exceeded) r.budget_hit = true;
        r.error = e.what();
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    });
    barrier(buffers);
    for (int i = 0; i < n; ++i) {
      if (results[i].state) {
        states[i] = std::move(results[i].state);
      } else {
        record.agents[i].status = AgentStatus::init_failed;
        record.agents[i].error = results[i].error;
        budget_hit |= results[i].budget_hit;
      }
    }
  }

  auto active_ids = [&] {
    std::vector<AgentIndex> ids;
    for (int i = 0; i < n; ++i)
      if (states[i] && !states[i]->terminated) ids.push_back(i);
    return ids;
  };

  const bool modules_on = config.protocol == Protocol::excomm;
  int round = 0;
  while (!budget_hit && !active_ids().empty() && round < config.budgets.max_rounds) {
    ++round;
    const auto ids = active_ids();
    std::vector<TraceBuffer> buffers;
    std::vector<WorkerResult> results(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) buffers.emplace_back(Actor::of_agent(i), round, run_start);

    for_agents(ids, config.parallel_agents, [&](AgentIndex i) {
      auto& r = results[i];
      auto ac = agent_context(i, buffers[i]);
      AgentState state = *states[i];
      try {
        auto step = agent_step(ac, state, round);
        state = step.state;
        r.step = std::move(step);
        if (uses_revision(config.protocol) && due(round, config.consistency.period) &&
            state.plan.has_pending())
          state = self_revise(ac, state, round);
        if (check_terminate(state, config.budgets, round, client.exhausted(buffers[i])) ==
            TerminateDecision::finalize)
          state = finalize_agent(ac, state, round, !client.exhausted(buffers[i]));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::budget_exceeded) r.budget_hit = true;
        else r.error = e.what();
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      r.state = std::move(state);
    });
    barrier(buffers);

    for (auto i : ids) {
      auto& r = results[i];
      budget_hit |= r.budget_hit;
      if (!r.error.empty()) {
        record.agents[i].status = AgentStatus::failed;
        record.agents[i].error = r.error;
        r.state->terminated = true;
        r.state->final_answer = std::string(kUnanswered);
      }
      states[i] = std::move(r.state);
      if (r.step) {
        RoundStep rs;
        rs.round = round;
        rs.task_id = r.step->log.task_id;
        rs.task_description = r.step->task_description;
        rs.log = r.step->log;
        for (std::size_t k = 0; k < r.step->state.belief.size(); ++k) {
          const auto& e = r.step->state.belief.entries()[k];
          if (e.round == round && e.origin == BeliefOrigin::execution) rs.findings.push_back(e.text);
        }
        record.agents[i].steps.push_back(std::move(rs));
      }
    }
    if (budget_hit) break;

    const auto live = active_ids();
    const bool consistency_due =
        modules_on && config.consistency.enabled && due(round, config.consistency.period);
    const bool diversify_due =
        modules_on && config.diversify.enabled && due(round, config.diversify.period);
    if (!live.empty() && (consistency_due || diversify_due)) {
      ModuleRound mr;
      mr.round = round;
      std::vector<AgentState> snapshot;
      for (auto i : live) snapshot.push_back(*states[i]);
      try {
        if (consistency_due) {
          TraceBuffer sink(Actor{ActorKind::consistency}, round, run_start);
          ModuleContext mc{client, ctx.toolkit, sink, problem.tool_profile, config.seed,
                           sandbox_for("resolver"), config.sampling.max_output_tokens,
                           config.sampling.module_temperature};
          try {
            auto report = extract_conflicts(mc, snapshot, round);
            auto set = resolve_conflicts(mc, report, config.consistency.resolver_tool_budget);
            mr.conflicts = report.conflicts;
            mr.resolutions = set.resolutions;
            auto routed = dispatch(set, live);
            for (auto& s : snapshot) {
              const auto before = s.belief.size();
              for (const auto& res : routed[s.index])
                s = apply_soft_update(s, res, round, config.consistency.update_mode);
              if (s.belief.size() == before) continue;
              mr.belief_updates[s.index] = static_cast<int>(s.belief.size() - before);
              json added = json::array();
              for (std::size_t k = before; k < s.belief.size(); ++k)
                added.push_back(s.belief.entries()[k]);
              sink.emit(EventKind::belief_update,
                        json{{"agent", s.index},
                             {"origin", to_string(config.consistency.update_mode == UpdateMode::soft
                                                      ? BeliefOrigin::soft_update
                                                      : BeliefOrigin::hard_update)},
                             {"added", added}});
            }
          } catch (...) {
            flush_one(sink);
            throw;
          }
          flush_one(sink);
        }
        if (diversify_due) {
          TraceBuffer sink(Actor{ActorKind::diversify}, round, run_start);
          ModuleContext mc{client, ctx.toolkit, sink, problem.tool_profile, config.seed,
                           sandbox_for("diversifier"), config.sampling.max_output_tokens,
                           config.sampling.module_temperature};
          try {
            auto set = analyze_plans(mc, snapshot, round);
            mr.directives = set.directives;
            auto next = apply_directives(snapshot, set);
            for (std::size_t k = 0; k < next.size(); ++k)
              if (next[k].plan != snapshot[k].plan)
                sink.emit(EventKind::plan_update, json{{"agent", next[k].index},
                                                       {"reason", "directive"},
                                                       {"plan", next[k].plan}});
            snapshot = std::move(next);
          } catch (...) {
            flush_one(sink);
            throw;
          }
          flush_one(sink);
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::budget_exceeded) throw;
        budget_hit = true;
      }
      for (auto& s : snapshot) states[s.index] = s;
      record.modules.push_back(std::move(mr));
    }

    for (auto i : ids) {
      auto& steps = record.agents[i].steps;
      if (!steps.empty() && steps.back().round == round && states[i]) {
        steps.back().belief_size = states[i]->belief.size();
        steps.back().plan = states[i]->plan;
      }
    }
  }
  record.rounds = round;

  // Anyone still running was cut off by the token budget.
  {
    TraceBuffer sink(Actor{ActorKind::orchestrator}, round, run_start);
    for (int i = 0; i < n; ++i) {
      if (!states[i] || states[i]->terminated) continue;
      auto ac = agent_context(i, sink);
      states[i] = finalize_agent(ac, *states[i], round, false);
    }
    for (int i = 0; i < n; ++i) {
      if (states[i]) record.agents[i].final_state = *states[i];
      record.final_answers.push_back(states[i] && states[i]->final_answer
                                         ? *states[i]->final_answer
                                         : std::string(kUnanswered));
    }
    auto vote = majority_vote(record.final_answers);
    record.aggregated_answer = vote.answer;
    record.aggregated_display = vote.display;
    sink.emit(EventKind::finalize, json{{"answers", record.final_answers},
                                        {"aggregated", vote.answer},
                                        {"counts", vote.counts}});
    flush_one(sink);
  }

  const bool any_survivor = std::any_of(states.begin(), states.end(),
                                        [](const auto& s) { return s.has_value(); });
  record.status = !any_survivor ? (budget_hit ? RunStatus::budget_exhausted : RunStatus::failed)
                  : budget_hit  ? RunStatus::budget_exhausted
                                : RunStatus::completed;
  record.usage = client.committed();
  record.wall_time_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - run_start).count();
  return record;
}

TreeSearchProtocol::TreeSearchProtocol(Params params) : params_(params) {}

RunRecord TreeSearchProtocol::run(const Problem&, RunContext&) {
  throw Error(ErrorCode::config_error,
              fmt::format("tree search (beam {}, depth {}) is not available", params_.beam_width,
                          params_.depth));
}

}  // namespace concord

// SPDX-License-Identifier: Apache-2.0
#include "concord/evalkit.hpp"

#include <algorithm>

#include <fmt/core.h>

namespace concord {

double accuracy(const std::vector<RunRecord>& records,
                const std::map<std::string, std::string>& references) {
  if (records.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& r : records) {
    auto it = references.find(r.problem_id);
    if (it == references.end())
      throw Error(ErrorCode::missing_reference,
                  fmt::format("no reference answer for problem '{}'", r.problem_id));
    if (r.aggregated_answer != kUnanswered &&
        normalize_answer(r.aggregated_answer) == normalize_answer(it->second))
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

std::string render_round(const RoundStep& step) {
  std::string out;
  for (const auto& s : step.log.steps)
    if (!s.thought.empty()) out += s.thought + "\n";
  for (const auto& f : step.findings) out += f + "\n";
  return out;
}

std::string render_trajectory(const AgentTrajectory& trajectory) {
  std::string out;
  for (const auto& s : trajectory.steps) out += render_round(s);
  return out;
}

double trajectory_diversity(const RunRecord& record) {
  std::vector<std::string> texts;
  for (const auto& a : record.agents) texts.push_back(render_trajectory(a));
  return diversity_score(texts);
}

double step_diversity(const std::vector<std::map<int, std::string>>& per_agent) {
  std::map<int, std::vector<std::string>> by_round;
  for (const auto& agent : per_agent)
    for (const auto& [round, text] : agent)
      if (!bleu_tokenize(text).empty()) by_round[round].push_back(text);
  double sum = 0.0;
  int rounds = 0;
  for (const auto& [round, texts] : by_round) {
    if (texts.size() < 2) continue;
    sum += diversity_score(texts);
    ++rounds;
  }
  if (rounds == 0)
    throw Error(ErrorCode::degenerate_input, "no round has two or more active agents");
  return sum / rounds;
}

double step_diversity(const RunRecord& record) {
  std::vector<std::map<int, std::string>> per_agent;
  for (const auto& a : record.agents) {
    std::map<int, std::string> m;
    for (const auto& s : a.steps) m[s.round] = render_round(s);
    per_agent.push_back(std::move(m));
  }
  return step_diversity(per_agent);
}

// ---------------------------------------------------------------------------

std::vector<prompts::CriticStep> critic_steps(const AgentTrajectory& trajectory) {
  const auto& entries = trajectory.final_state.belief.entries();
  auto memory_diff = [&](int round) {
    std::string out;
    for (const auto& e : entries)
      if (e.round == round) out += render_entry(e);
    return out.empty() ? std::string("(no change)") : out;
  };
  std::vector<prompts::CriticStep> steps;
  int last_round = 0;
  for (const auto& s : trajectory.steps) last_round = std::max(last_round, s.round);
  for (const auto& e : entries) last_round = std::max(last_round, e.round);

  std::string init_action = "Drafted the initial plan";
  for (const auto& t : trajectory.final_state.plan.tasks)
    if (t.created_round == 0) init_action += fmt::format("\n- {}", t.description);
  steps.push_back({init_action, memory_diff(0)});
  for (int r = 1; r <= last_round; ++r) {
    std::string action;
    for (const auto& s : trajectory.steps) {
      if (s.round != r) continue;
      action = fmt::format("Task [{}] {}\n{}", s.task_id, s.task_description,
                           prompts::render_log(s.log));
    }
    if (action.empty()) action = "(idle)";
    steps.push_back({action, memory_diff(r)});
  }
  return steps;
}

std::string_view to_string(CriticStatus s) {
  switch (s) {
    case CriticStatus::ok: return "ok";
    case CriticStatus::inconsistent: return "inconsistent";
    case CriticStatus::unevaluable: return "unevaluable";
  }
  return "?";
}

CriticOutcome critic_recovery(const AgentTrajectory& trajectory, const Problem& problem,
                              ModelClient& client, TraceBuffer& sink,
                              const std::string& tag_prefix) {
  if (!problem.reference_answer || !problem.reference_solution)
    throw Error(ErrorCode::missing_reference,
                fmt::format("problem '{}' lacks reference answer or solution", problem.id));
  const std::string agent_id = fmt::format("Agent {}", trajectory.index);
  auto prompt = prompts::critic(agent_id, problem, critic_steps(trajectory));
  ChatRequest request;
  request.messages = prompt.messages;
  request.template_id = prompt.template_id;
  request.request_tag = fmt::format("{}.a{}", tag_prefix, trajectory.index);
  request.temperature = 0.0;

  std::function<std::vector<CriticFinding>(std::string_view)> parse = [](std::string_view text) {
    auto findings = parse_critic_report(text);
    for (const auto& f : findings)
      if (f.recovered_step && *f.recovered_step <= f.occurrence_step)
        throw ParseFailure(fmt::format("recovered step {} is not after occurrence step {}",
                                       *f.recovered_step, f.occurrence_step),
                           f.description);
    return findings;
  };
  auto findings = complete_structured<std::vector<CriticFinding>>(
      client, request, sink, Schema::critic_report, parse, nullptr, 1);
  if (!findings) return CriticOutcome{CriticStatus::unevaluable, {}};

  const auto& answer = trajectory.final_state.final_answer;
  const bool wrong = !answer || *answer == kUnanswered ||
                     normalize_answer(*answer) != normalize_answer(*problem.reference_answer);
  auto violates = [&](const std::vector<CriticFinding>& fs) {
    return wrong && std::none_of(fs.begin(), fs.end(),
                                 [](const CriticFinding& f) { return !f.recovered_step; });
  };
  if (!violates(*findings)) return CriticOutcome{CriticStatus::ok, std::move(*findings)};

  auto retry = prompts::critic_consistency_retry(
      "the final answer differs from the reference answer but no factual error is marked N/A");
  request.messages.push_back(
      ChatMessage{Role::assistant, "(previous analysis omitted)"});
  for (auto& m : retry.messages) request.messages.push_back(m);
  request.template_id = retry.template_id;
  request.request_tag = fmt::format("{}.a{}.consistency", tag_prefix, trajectory.index);
  auto second = complete_structured<std::vector<CriticFinding>>(
      client, request, sink, Schema::critic_report, parse, nullptr, 1);
  if (!second) return CriticOutcome{CriticStatus::inconsistent, std::move(*findings)};
  if (violates(*second)) return CriticOutcome{CriticStatus::inconsistent, std::move(*second)};
  return CriticOutcome{CriticStatus::ok, std::move(*second)};
}

std::optional<double> error_recovery_rate(const std::vector<CriticFinding>& findings) {
  if (findings.empty()) return std::nullopt;
  const auto recovered = std::count_if(findings.begin(), findings.end(),
                                       [](const CriticFinding& f) { return f.recovered_step; });
  return 100.0 * static_cast<double>(recovered) / static_cast<double>(findings.size());
}

std::optional<double> multi_critic_rate(const std::vector<std::vector<CriticFinding>>& per_critic) {
  double sum = 0.0;
  int defined = 0;
  for (const auto& fs : per_critic) {
    if (auto r = error_recovery_rate(fs)) {
      sum += *r;
      ++defined;
    }
  }
  if (defined == 0) return std::nullopt;
  return sum / defined;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ErrorType t) {
  switch (t) {
    case ErrorType::conflicting: return "Conflicting";
    case ErrorType::common: return "Common";
    case ErrorType::neutral: return "Neutral";
    case ErrorType::excluded: return "Excluded";
  }
  return "?";
}

ErrorType error_type_of(int category) {
  switch (category) {
    case 1:
    case 2: return ErrorType::conflicting;
    case 3: return ErrorType::common;
    case 4: return ErrorType::neutral;
    case 5: return ErrorType::excluded;
  }
  throw Error(ErrorCode::invalid_argument, fmt::format("error category {} outside 1..5", category));
}

std::vector<std::pair<std::string, std::string>> truncated_peer_logs(
    const RunRecord& record, AgentIndex agent, int occurrence_step) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& peer : record.agents) {
    if (peer.index == agent) continue;
    const auto steps = critic_steps(peer);
    std::string log;
    for (std::size_t k = 0; k < steps.size() && static_cast<int>(k) <= occurrence_step; ++k)
      log += fmt::format("<step_{0}>\nAction: {1}\nMemory Diff: {2}\n</step_{0}>\n", k,
                         steps[k].action, steps[k].memory_diff);
    out.emplace_back(fmt::format("Agent {}", peer.index), std::move(log));
  }
  return out;
}

std::optional<ErrorLabel> classify_error_type(const CriticFinding& finding, const RunRecord& record,
                                              AgentIndex agent, const Problem& problem,
                                              ModelClient& client, TraceBuffer& sink,
                                              const std::string& tag) {
  auto prompt = prompts::classify_error(
      problem.statement, std::to_string(agent), finding.occurrence_step, finding.description,
      truncated_peer_logs(record, agent, finding.occurrence_step));
  ChatRequest request;
  request.messages = std::move(prompt.messages);
  request.template_id = std::move(prompt.template_id);
  request.request_tag = tag;
  request.temperature = 0.0;
  auto category = complete_structured<int>(client, request, sink, Schema::error_type,
                                           parse_error_category, nullptr, 1);
  if (!category) return std::nullopt;
  return ErrorLabel{*category, error_type_of(*category)};
}

// ---------------------------------------------------------------------------

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::vector<CostRow> cost_summary(const std::vector<RunRecord>& records, const Prices& prices) {
  std::map<std::string, std::vector<const RunRecord*>> groups;
  for (const auto& r : records)
    groups[fmt::format("{}/N={}", to_string(r.config.protocol), r.config.n_agents)].push_back(&r);
  std::vector<CostRow> rows;
  for (const auto& [label, runs] : groups) {
    CostRow row;
    row.label = label;
    row.runs = runs.size();
    std::vector<double> latencies;
    double cost = 0.0;
    for (const auto* r : runs) {
      row.prompt_tokens += r->usage.prompt_tokens;
      row.completion_tokens += r->usage.completion_tokens;
      cost += prices.prompt_per_token * static_cast<double>(r->usage.prompt_tokens) +
              prices.completion_per_token * static_cast<double>(r->usage.completion_tokens);
      latencies.push_back(static_cast<double>(r->wall_time_ms));
    }
    row.cost = cost / static_cast<double>(runs.size());
    row.median_latency_ms = median(latencies);
    rows.push_back(std::move(row));
  }
  auto base = std::find_if(rows.begin(), rows.end(),
                           [](const CostRow& r) { return r.label == "independent/N=4"; });
  if (base != rows.end() && base->cost > 0) {
    const double unit = base->cost;
    for (auto& r : rows) r.normalized = r.cost / unit;
  }
  return rows;
}

}  // namespace concord

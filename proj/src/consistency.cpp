// SPDX-License-Identifier: Apache-2.0
#include "concord/consistency.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/core.h>

#include "concord/prompts.hpp"

namespace concord {

namespace {

std::string normalize_description(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  while (!out.empty() && (out.back() == '.' || out.back() == ' ')) out.pop_back();
  return out;
}

bool prefix_of(const std::string& a, const std::string& b) {
  return !a.empty() && b.compare(0, a.size(), a) == 0;
}

ChatRequest module_request(const ModuleContext& ctx, prompts::Prompt p, std::string tag) {
  ChatRequest r;
  r.messages = std::move(p.messages);
  r.template_id = std::move(p.template_id);
  r.request_tag = std::move(tag);
  r.temperature = ctx.temperature;
  r.seed = ctx.seed;
  r.max_output_tokens = ctx.max_output_tokens;
  return r;
}

}  // namespace

std::string_view to_string(UpdateMode m) { return m == UpdateMode::soft ? "soft" : "hard"; }

UpdateMode update_mode_from(std::string_view s) {
  if (s == "soft") return UpdateMode::soft;
  if (s == "hard") return UpdateMode::hard;
  throw Error(ErrorCode::config_error, fmt::format("unknown update mode '{}'", s));
}

ConflictReport extract_conflicts(ModuleContext& ctx, const std::vector<AgentState>& agents,
                                 int round) {
  ConflictReport report{round, {}};
  if (agents.size() < 2) return report;

  std::vector<std::pair<AgentIndex, BeliefState>> beliefs;
  for (const auto& a : agents) beliefs.emplace_back(a.index, a.belief);
  std::optional<std::vector<Conflict>> parsed;
  std::string error;
  try {
    parsed = complete_structured<std::vector<Conflict>>(
        ctx.client,
        module_request(ctx, prompts::consistency_extract(beliefs),
                       fmt::format("consistency.r{}.extract", round)),
        ctx.sink, Schema::conflict_report, parse_conflict_report, &error);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::budget_exceeded) throw;
    error = e.what();
  }
  if (!parsed) {
    ctx.sink.emit(EventKind::conflict, json{{"status", "extraction_failed"}, {"error", error}});
    return report;
  }
  for (auto& c : *parsed) {
    const bool known = std::all_of(c.agents.begin(), c.agents.end(), [&](AgentIndex i) {
      return std::any_of(agents.begin(), agents.end(),
                         [i](const AgentState& a) { return a.index == i; });
    });
    if (!known || c.agents.empty()) continue;
    ctx.sink.emit(EventKind::conflict, json{{"conflict", c}});
    report.conflicts.push_back(std::move(c));
  }
  return report;
}

std::optional<std::size_t> match_conflict(const Resolution& r, const std::vector<Conflict>& cs,
                                          const std::vector<bool>& taken) {
  const auto rd = normalize_description(r.description);
  for (std::size_t k = 0; k < cs.size(); ++k) {
    if (taken[k]) continue;
    const auto cd = normalize_description(cs[k].description);
    if (rd != cd && !prefix_of(rd, cd) && !prefix_of(cd, rd)) continue;
    const bool subset = std::all_of(r.agents.begin(), r.agents.end(), [&](AgentIndex a) {
      return std::find(cs[k].agents.begin(), cs[k].agents.end(), a) != cs[k].agents.end();
    });
    if (subset && !r.agents.empty()) return k;
  }
  return std::nullopt;
}

ResolutionSet resolve_conflicts(ModuleContext& ctx, const ConflictReport& report,
                                int tool_budget) {
  ResolutionSet out{report.round, {}};
  if (report.conflicts.empty()) return out;

  auto request = module_request(ctx, prompts::consistency_resolve(report.conflicts, tool_budget > 0),
                                "");
  const auto tools = tool_schemas(ctx.profile);
  int tool_steps = 0;
  int repairs = 0;
  bool notified = false;
  std::optional<std::vector<Resolution>> parsed;
  for (int k = 0;; ++k) {
    const bool tools_open = tool_steps < tool_budget;
    request.tools = tools_open ? tools : std::vector<ToolSchema>{};
    if (!tools_open && tool_budget > 0 && !notified) {
      request.messages.push_back(prompts::budget_exhausted_message());
      notified = true;
    }
    request.request_tag = fmt::format("consistency.r{}.resolve.{}", report.round, k);
    ChatResponse response;
    try {
      response = ctx.client.complete(request, ctx.sink);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::budget_exceeded) throw;
      break;
    }
    if (response.text) {
      try {
        parsed = parse_resolution_set(*response.text);
        break;
      } catch (const ParseFailure& e) {
        if (repairs++ >= kMaxRepairs) break;
        request.messages.push_back(ChatMessage{Role::assistant, *response.text});
        request.messages.push_back(ChatMessage{
            Role::user, fmt::format("Your previous reply could not be parsed ({}). Reply again "
                                    "using exactly this format:\n{}",
                                    e.what(), format_hint(Schema::resolution_set))});
        continue;
      }
    }
    // Tool call. Calls beyond the budget are refused without execution.
    const auto& model_call = *response.tool_call;
    request.messages.push_back(ChatMessage{
        Role::assistant, fmt::format("Calling {} with {}", model_call.name, model_call.arguments)});
    if (!tools_open) {
      if (repairs++ >= kMaxRepairs) break;
      request.messages.push_back(prompts::budget_exhausted_message());
      continue;
    }
    ++tool_steps;
    ToolCall call;
    try {
      call = to_tool_call(model_call, ctx.profile);
    } catch (const Error& e) {
      request.messages.push_back(prompts::tool_error_message(e.what()));
      continue;
    }
    const auto tool_tag = request.request_tag + ".tool";
    ctx.sink.emit(EventKind::tool_call, json{{"tag", tool_tag}, {"call", call}});
    ToolResult result;
    try {
      result = ctx.toolkit.execute(call, ctx.sandbox, tool_tag);
      ctx.sink.emit(EventKind::tool_result, json{{"tag", tool_tag}, {"result", result}});
    } catch (const Error& e) {
      result = ToolResult{false, e.what(), 0};
      ctx.sink.emit(EventKind::tool_result, json{{"tag", tool_tag},
                                                 {"error", to_string(e.code())},
                                                 {"message", e.detail()}});
    }
    request.messages.push_back(prompts::tool_result_message(call, result));
  }
  if (!parsed) {
    ctx.sink.emit(EventKind::resolution, json{{"status", "unresolved"}});
    return out;
  }

  std::vector<bool> taken(report.conflicts.size(), false);
  for (auto& r : *parsed) {
    auto k = match_conflict(r, report.conflicts, taken);
    if (!k) {
      ctx.sink.emit(EventKind::resolution, json{{"status", "unmatched"}, {"resolution", r}});
      continue;
    }
    taken[*k] = true;
    ctx.sink.emit(EventKind::resolution, json{{"status", "dispatched"}, {"resolution", r}});
    out.resolutions.push_back(std::move(r));
  }
  return out;
}

std::map<AgentIndex, std::vector<Resolution>> dispatch(const ResolutionSet& set,
                                                       const std::vector<AgentIndex>& agents) {
  std::map<AgentIndex, std::vector<Resolution>> out;
  for (auto a : agents) out[a];
  for (const auto& r : set.resolutions)
    for (auto a : r.agents)
      if (out.count(a)) out[a].push_back(r);
  return out;
}

std::string soft_update_text(const Resolution& r, AgentIndex agent) {
  auto claim = r.claims.count(agent) ? r.claims.at(agent) : std::string("(none recorded)");
  return fmt::format(
      "Topic: {}\nYour earlier claim: {}\nSuggested correct claim: {}\nJustification: {}\n"
      "This suggestion contradicts your earlier claim. It comes from an outside check and may "
      "itself be correct or incorrect; weigh it against your own evidence.",
      r.description, claim, r.correct_claim, r.justification);
}

std::string hard_update_text(const Resolution& r, AgentIndex agent) {
  auto claim = r.claims.count(agent) ? r.claims.at(agent) : std::string("(none recorded)");
  return fmt::format("Topic: {}\nRetracted claim: {}\nCorrect claim: {}\nJustification: {}",
                     r.description, claim, r.correct_claim, r.justification);
}

AgentState apply_soft_update(const AgentState& state, const Resolution& r, int round,
                             UpdateMode mode) {
  if (std::find(r.agents.begin(), r.agents.end(), state.index) == r.agents.end())
    throw Error(ErrorCode::target_mismatch,
                fmt::format("resolution does not involve agent {}", state.index));
  AgentState next = state;
  next.belief = mode == UpdateMode::soft
                    ? belief_append(state.belief, round, BeliefOrigin::soft_update,
                                    soft_update_text(r, state.index))
                    : belief_append(state.belief, round, BeliefOrigin::hard_update,
                                    hard_update_text(r, state.index));
  return next;
}

}  // namespace concord

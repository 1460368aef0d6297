// SPDX-License-Identifier: Apache-2.0
#include "concord/diversify.hpp"

#include <algorithm>
#include <set>

#include <fmt/core.h>

#include "concord/prompts.hpp"

namespace concord {

std::vector<Directive> sanitize_directives(std::vector<Directive> directives,
                                           const std::vector<AgentIndex>& active) {
  std::vector<Directive> out;
  std::set<AgentIndex> seen;
  for (auto& d : directives) {
    if (std::find(active.begin(), active.end(), d.target_agent_index) == active.end()) continue;
    if (!seen.insert(d.target_agent_index).second) continue;
    out.push_back(std::move(d));
  }
  return out;
}

DirectiveSet analyze_plans(ModuleContext& ctx, const std::vector<AgentState>& agents, int round) {
  DirectiveSet out{round, {}};
  if (agents.size() < 2) return out;

  std::vector<std::pair<AgentIndex, Plan>> plans;
  std::vector<AgentIndex> active;
  for (const auto& a : agents) {
    plans.emplace_back(a.index, a.plan);
    active.push_back(a.index);
  }
  ChatRequest request;
  auto prompt = prompts::diversify_analyze(plans);
  request.messages = std::move(prompt.messages);
  request.template_id = std::move(prompt.template_id);
  request.request_tag = fmt::format("diversify.r{}.analyze", round);
  request.temperature = ctx.temperature;
  request.seed = ctx.seed;
  request.max_output_tokens = ctx.max_output_tokens;

  std::optional<std::vector<Directive>> parsed;
  std::string error;
  try {
    parsed = complete_structured<std::vector<Directive>>(ctx.client, request, ctx.sink,
                                                         Schema::directive_set,
                                                         parse_directive_set, &error);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::budget_exceeded) throw;
    error = e.what();
  }
  if (!parsed) {
    ctx.sink.emit(EventKind::directive, json{{"status", "analysis_failed"}, {"error", error}});
    return out;
  }
  out.directives = sanitize_directives(std::move(*parsed), active);
  for (const auto& d : out.directives) ctx.sink.emit(EventKind::directive, json{{"directive", d}});
  return out;
}

std::vector<AgentState> apply_directives(const std::vector<AgentState>& states,
                                         const DirectiveSet& set) {
  std::vector<AgentState> out = states;
  for (const auto& d : set.directives) {
    auto it = std::find_if(out.begin(), out.end(), [&](const AgentState& s) {
      return s.index == d.target_agent_index;
    });
    if (it == out.end() || it->terminated) continue;
    it->plan = plan_apply_directive(it->plan, it->index, d, set.round);
  }
  return out;
}

}  // namespace concord

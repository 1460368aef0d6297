// SPDX-License-Identifier: Apache-2.0
//
// Plan-level diversification: one batched look at every active agent's plan,
// producing at most one redirecting directive per agent.
#pragma once

#include <vector>

#include "concord/consistency.hpp"

namespace concord {

struct DiversifyConfig {
  bool enabled = true;
  int period = 1;
};

struct DirectiveSet {
  int round = 0;
  std::vector<Directive> directives;
};

/// Keeps the first directive per target and drops targets outside `active`.
std::vector<Directive> sanitize_directives(std::vector<Directive> directives,
                                           const std::vector<AgentIndex>& active);

/// Fewer than two active agents yields an empty set without a model call.
/// Fails open to an empty set.
DirectiveSet analyze_plans(ModuleContext& ctx, const std::vector<AgentState>& agents, int round);

/// Applies each directive to its target's plan. Directives to terminated or
/// unknown agents are skipped; beliefs are never touched.
std::vector<AgentState> apply_directives(const std::vector<AgentState>& states,
                                         const DirectiveSet& set);

}  // namespace concord

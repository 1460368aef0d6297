// SPDX-License-Identifier: Apache-2.0
//
// Run configuration file (JSON). Keys, all optional:
//
//   protocol, n_agents, seed, parallel_agents,
//   budgets {max_rounds, max_react_steps_per_task, max_tokens},
//   consistency {enabled, period, resolver_tool_budget, update_mode},
//   diversify {enabled, period},
//   sampling {solver_temperature, module_temperature, max_output_tokens},
//   backend, critic_backends [..],
//   sandbox {interpreter [..], timeout_ms, output_cap_bytes, search_fixture, root},
//   prices {prompt_per_token, completion_per_token}
#pragma once

#include <string>
#include <vector>

#include "concord/evalkit.hpp"
#include "concord/orchestrator.hpp"
#include "concord/toolkit.hpp"

namespace concord {

struct RunConfig {
  ProtocolConfig protocol;
  std::string backend;
  std::vector<std::string> critic_backends;
  SandboxConfig sandbox;
  Prices prices;
};

/// Throws ConfigError on malformed content. Relative sandbox paths resolve
/// against the config file's directory.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const json& j, const std::filesystem::path& base_dir = {});

}  // namespace concord

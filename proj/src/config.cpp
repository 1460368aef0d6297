// SPDX-License-Identifier: Apache-2.0
#include "concord/config.hpp"

#include <fstream>

#include <fmt/core.h>

namespace concord {

namespace fs = std::filesystem;

RunConfig parse_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::config_error, "configuration must be an object");
  RunConfig c;
  try {
    c.protocol = j.get<ProtocolConfig>();
    c.backend = j.value("backend", "");
    c.critic_backends = j.value("critic_backends", std::vector<std::string>{});
    const auto s = j.value("sandbox", json::object());
    if (s.contains("interpreter")) {
      c.sandbox.interpreter = s["interpreter"].is_string()
                                  ? std::vector<std::string>{s["interpreter"].get<std::string>()}
                                  : s["interpreter"].get<std::vector<std::string>>();
    }
    c.sandbox.timeout_ms = s.value("timeout_ms", c.sandbox.timeout_ms);
    c.sandbox.output_cap_bytes = s.value("output_cap_bytes", c.sandbox.output_cap_bytes);
    auto resolve = [&](const std::string& p) {
      if (p.empty() || fs::path(p).is_absolute() || base_dir.empty()) return p;
      return (base_dir / p).string();
    };
    c.sandbox.search_fixture = resolve(s.value("search_fixture", ""));
    c.sandbox.root = resolve(s.value("root", ""));
    const auto p = j.value("prices", json::object());
    c.prices.prompt_per_token = p.value("prompt_per_token", c.prices.prompt_per_token);
    c.prices.completion_per_token = p.value("completion_per_token", c.prices.completion_per_token);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, fmt::format("cannot open config {}", path));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, fmt::format("{}: {}", path, e.what()));
  }
  return parse_config(j, fs::path(path).parent_path());
}

}  // namespace concord

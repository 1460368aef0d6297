// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "concord/core_model.hpp"
#include "concord/model_client.hpp"

namespace concord {

struct SandboxConfig {
  std::vector<std::string> interpreter{"python3"};
  long timeout_ms = 30'000;
  std::size_t output_cap_bytes = 16 * 1024;
  std::string search_fixture;  // empty: web_search unavailable
  std::filesystem::path root;  // sandboxes live under root/<sandbox id>
};

inline constexpr std::string_view kTruncationMarker = "\n...[output truncated]";

/// Caps `output` at `cap` bytes and appends the truncation marker if cut.
std::string cap_output(std::string output, std::size_t cap);

struct SearchHit {
  std::string title;
  std::string url;
  std::string snippet;
};

class SearchClient {
 public:
  virtual ~SearchClient() = default;
  virtual std::vector<SearchHit> search(const std::string& query) = 0;
};

/// Canned results keyed by exact query: {"query": [{"title","url","snippet"}]}.
class FixtureSearch : public SearchClient {
 public:
  explicit FixtureSearch(std::map<std::string, std::vector<SearchHit>> results);
  static std::shared_ptr<FixtureSearch> from_file(const std::string& path);

  std::vector<SearchHit> search(const std::string& query) override;

 private:
  std::map<std::string, std::vector<SearchHit>> results_;
};

bool tool_allowed(ToolName name, ToolProfile profile);
std::vector<ToolSchema> tool_schemas(ToolProfile profile);

/// Validates a model-issued call against the active profile and the tool's
/// argument schema. Throws UnknownTool or InvalidArgument.
ToolCall to_tool_call(const ModelToolCall& call, ToolProfile profile);

class Toolkit {
 public:
  virtual ~Toolkit() = default;

  /// `sandbox` names the caller's isolated directory; `tag` identifies the
  /// call for tracing and replay. Throws Timeout, SandboxViolation,
  /// UnknownTool.
  virtual ToolResult execute(const ToolCall& call, const std::string& sandbox,
                             const std::string& tag) = 0;
};

/// Runs tools on the local machine. Calls for the same sandbox are
/// serialized; distinct sandboxes run concurrently.
class LocalToolkit : public Toolkit {
 public:
  explicit LocalToolkit(SandboxConfig config, std::shared_ptr<SearchClient> search = nullptr);

  ToolResult execute(const ToolCall& call, const std::string& sandbox,
                     const std::string& tag) override;

  std::filesystem::path sandbox_dir(const std::string& sandbox) const;
  const SandboxConfig& config() const { return config_; }

 private:
  std::string run_code(const std::string& code, const std::filesystem::path& dir, bool& ok);
  std::filesystem::path confine(const std::filesystem::path& dir, const std::string& path) const;
  std::mutex& lock_for(const std::string& sandbox);

  SandboxConfig config_;
  std::shared_ptr<SearchClient> search_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

}  // namespace concord

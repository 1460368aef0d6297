// SPDX-License-Identifier: Apache-2.0
#include "concord/toolkit.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/core.h>

namespace concord {

namespace fs = std::filesystem;

namespace {

json string_param(std::string_view description) {
  return json{{"type", "string"}, {"description", description}};
}

json object_schema(json properties, std::vector<std::string> required) {
  return json{{"type", "object"}, {"properties", std::move(properties)}, {"required", required}};
}

struct ToolSpec {
  ToolName name;
  std::string_view description;
  std::vector<std::string> required;
};

const std::vector<ToolSpec>& specs() {
  static const std::vector<ToolSpec> all{
      {ToolName::run_code, "Execute a Python program and return its stdout/stderr.", {"code"}},
      {ToolName::read_file, "Read a file from the working directory.", {"path"}},
      {ToolName::write_file, "Write a file in the working directory.", {"path", "content"}},
      {ToolName::list_dir, "List a directory inside the working directory.", {"path"}},
      {ToolName::web_search, "Search the web; returns ranked title/url/snippet results.", {"query"}},
  };
  return all;
}

std::string rstrip(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

bool mentions_network(const std::string& code) {
  static const std::regex net(
      R"(\b(import|from)\s+(socket|urllib|urllib3|requests|http|httpx|aiohttp|ftplib|smtplib|telnetlib|websocket)\b)");
  return std::regex_search(code, net);
}

long elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               since)
      .count();
}

}  // namespace

std::string cap_output(std::string output, std::size_t cap) {
  if (output.size() <= cap) return output;
  output.resize(cap);
  output += kTruncationMarker;
  return output;
}

FixtureSearch::FixtureSearch(std::map<std::string, std::vector<SearchHit>> results)
    : results_(std::move(results)) {}

std::shared_ptr<FixtureSearch> FixtureSearch::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot open search fixture {}", path));
  std::map<std::string, std::vector<SearchHit>> results;
  try {
    auto j = json::parse(in);
    for (auto it = j.begin(); it != j.end(); ++it) {
      auto& hits = results[it.key()];
      for (const auto& h : it.value())
        hits.push_back(SearchHit{h.value("title", ""), h.value("url", ""), h.value("snippet", "")});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, fmt::format("{}: {}", path, e.what()));
  }
  return std::make_shared<FixtureSearch>(std::move(results));
}

std::vector<SearchHit> FixtureSearch::search(const std::string& query) {
  auto it = results_.find(query);
  return it == results_.end() ? std::vector<SearchHit>{} : it->second;
}

bool tool_allowed(ToolName name, ToolProfile profile) {
  return profile == ToolProfile::code_file_search || name == ToolName::run_code;
}

std::vector<ToolSchema> tool_schemas(ToolProfile profile) {
  std::vector<ToolSchema> out;
  for (const auto& spec : specs()) {
    if (!tool_allowed(spec.name, profile)) continue;
    json props = json::object();
    for (const auto& r : spec.required) props[r] = string_param(r);
    out.push_back(ToolSchema{std::string(to_string(spec.name)), std::string(spec.description),
                             object_schema(props, spec.required)});
  }
  return out;
}

ToolCall to_tool_call(const ModelToolCall& call, ToolProfile profile) {
  auto name = tool_name_from(call.name);
  if (!name || !tool_allowed(*name, profile))
    throw Error(ErrorCode::unknown_tool,
                fmt::format("tool '{}' is not available under profile {}", call.name,
                            to_string(profile)));
  json args;
  try {
    args = json::parse(call.arguments);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, fmt::format("arguments are not JSON: {}", e.what()));
  }
  if (!args.is_object()) throw Error(ErrorCode::invalid_argument, "arguments must be an object");
  for (const auto& spec : specs()) {
    if (spec.name != *name) continue;
    for (const auto& r : spec.required)
      if (!args.contains(r) || !args[r].is_string())
        throw Error(ErrorCode::invalid_argument,
                    fmt::format("{} requires string argument '{}'", call.name, r));
  }
  return ToolCall{*name, args.dump()};
}

// ---------------------------------------------------------------------------

LocalToolkit::LocalToolkit(SandboxConfig config, std::shared_ptr<SearchClient> search)
    : config_(std::move(config)), search_(std::move(search)) {
  if (config_.root.empty()) config_.root = fs::temp_directory_path() / "concord-sandboxes";
  if (!search_ && !config_.search_fixture.empty())
    search_ = FixtureSearch::from_file(config_.search_fixture);
  if (config_.interpreter.empty())
    throw Error(ErrorCode::config_error, "sandbox interpreter command is empty");
}

fs::path LocalToolkit::sandbox_dir(const std::string& sandbox) const {
  return config_.root / sandbox;
}

std::mutex& LocalToolkit::lock_for(const std::string& sandbox) {
  std::lock_guard guard(locks_mutex_);
  auto& slot = locks_[sandbox];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

fs::path LocalToolkit::confine(const fs::path& dir, const std::string& path) const {
  const auto root = fs::weakly_canonical(dir);
  const auto target = fs::weakly_canonical(fs::path(path).is_absolute() ? fs::path(path) : dir / path);
  auto r = root.native();
  auto t = target.native();
  if (t != r && t.rfind(r + "/", 0) != 0)
    throw Error(ErrorCode::sandbox_violation, fmt::format("path '{}' escapes the sandbox", path));
  return target;
}

ToolResult LocalToolkit::execute(const ToolCall& call, const std::string& sandbox,
                                 const std::string& /*tag*/) {
  std::lock_guard guard(lock_for(sandbox));
  const auto start = std::chrono::steady_clock::now();
  const auto dir = sandbox_dir(sandbox);
  fs::create_directories(dir);

  json args = json::parse(call.arguments);
  ToolResult result;
  result.ok = true;
  switch (call.name) {
    case ToolName::run_code: {
      const auto code = args.at("code").get<std::string>();
      if (mentions_network(code))
        throw Error(ErrorCode::sandbox_violation, "network access is not permitted in run_code");
      result.output = run_code(code, dir, result.ok);
      break;
    }
    case ToolName::read_file: {
      auto target = confine(dir, args.at("path").get<std::string>());
      std::ifstream in(target, std::ios::binary);
      if (!in) {
        result.ok = false;
        result.output = fmt::format("cannot read {}", args["path"].get<std::string>());
      } else {
        std::ostringstream ss;
        ss << in.rdbuf();
        result.output = ss.str();
      }
      break;
    }
    case ToolName::write_file: {
      auto target = confine(dir, args.at("path").get<std::string>());
      fs::create_directories(target.parent_path());
      std::ofstream out(target, std::ios::binary | std::ios::trunc);
      out << args.at("content").get<std::string>();
      result.ok = static_cast<bool>(out);
      result.output = result.ok ? fmt::format("wrote {} bytes", args["content"].get<std::string>().size())
                                : "write failed";
      break;
    }
    case ToolName::list_dir: {
      auto target = confine(dir, args.at("path").get<std::string>());
      std::vector<std::string> names;
      std::error_code ec;
      for (const auto& entry : fs::directory_iterator(target, ec))
        names.push_back(entry.path().filename().string() + (entry.is_directory() ? "/" : ""));
      if (ec) {
        result.ok = false;
        result.output = ec.message();
      } else {
        std::sort(names.begin(), names.end());
        for (const auto& n : names) result.output += n + "\n";
        result.output = rstrip(result.output);
      }
      break;
    }
    case ToolName::web_search: {
      const auto query = args.at("query").get<std::string>();
      if (!search_) {
        result.ok = false;
        result.output = "web search is not configured";
        break;
      }
      auto hits = search_->search(query);
      if (hits.empty()) {
        result.ok = false;
        result.output = fmt::format("no results for '{}'", query);
      }
      for (std::size_t i = 0; i < hits.size(); ++i)
        result.output += fmt::format("{}. {}\n   {}\n   {}\n", i + 1, hits[i].title, hits[i].url,
                                     hits[i].snippet);
      result.output = rstrip(result.output);
      break;
    }
  }
  result.output = cap_output(std::move(result.output), config_.output_cap_bytes);
  result.wall_time_ms = elapsed_ms(start);
  return result;
}

std::string LocalToolkit::run_code(const std::string& code, const fs::path& dir, bool& ok) {
  const auto script = dir / ".concord_snippet.py";
  {
    std::ofstream out(script, std::ios::trunc);
    out << code;
  }
  std::vector<std::string> args = config_.interpreter;
  args.push_back(script.filename().string());
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  const std::string workdir = dir.string();

  int pipefd[2];
  if (pipe2(pipefd, O_CLOEXEC) != 0) throw Error(ErrorCode::io_error, "pipe failed");
  pid_t pid = fork();
  if (pid < 0) {
    close(pipefd[0]);
    close(pipefd[1]);
    throw Error(ErrorCode::io_error, "fork failed");
  }
  if (pid == 0) {
    // Child: async-signal-safe calls only.
    setpgid(0, 0);
    if (chdir(workdir.c_str()) != 0) _exit(126);
    dup2(pipefd[1], STDOUT_FILENO);
    dup2(pipefd[1], STDERR_FILENO);
    int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    unshare(CLONE_NEWUSER | CLONE_NEWNET);  // best effort; fails without user namespaces
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(pipefd[1]);

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(config_.timeout_ms);
  std::string output;
  bool timed_out = false;
  char buf[4096];
  while (true) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                         deadline - std::chrono::steady_clock::now())
                         .count();
    if (remaining <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{pipefd[0], POLLIN, 0};
    int rc = poll(&pfd, 1, static_cast<int>(std::min<long>(remaining, 1000)));
    if (rc < 0 && errno == EINTR) continue;
    if (rc == 0) continue;
    ssize_t n = read(pipefd[0], buf, sizeof buf);
    if (n <= 0) break;
    if (output.size() <= config_.output_cap_bytes) output.append(buf, static_cast<std::size_t>(n));
  }
  close(pipefd[0]);
  if (timed_out) kill(-pid, SIGKILL);
  int status = 0;
  waitpid(pid, &status, 0);
  std::error_code ec;
  fs::remove(script, ec);
  if (timed_out)
    throw Error(ErrorCode::timeout, fmt::format("run_code exceeded {} ms", config_.timeout_ms));
  ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  if (WIFEXITED(status) && WEXITSTATUS(status) == 127 && output.empty())
    output = fmt::format("interpreter '{}' could not be started", config_.interpreter.front());
  return rstrip(std::move(output));
}

}  // namespace concord

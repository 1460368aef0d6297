// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "concord/replay.hpp"
#include "support.hpp"

using namespace concord;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = CONCORD_FIXTURES;

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome cli(const std::string& args, const fs::path& scratch) {
  const auto log = scratch / "cli.log";
  const auto cmd = fmt::format("'{}' {} > '{}' 2>&1", CONCORD_CLI, args, log.string());
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  o.output = ss.str();
  return o;
}

std::string backend() { return fmt::format("scripted:{}/cli_script.json", kFixtures); }

std::string run_args(const fs::path& out) {
  return fmt::format("run --config {0}/cli_config.json --problems {0}/problems.jsonl --out '{1}' "
                     "--backend {2}",
                     kFixtures, out.string(), backend());
}

std::vector<json> jsonl(const fs::path& file) {
  std::ifstream in(file);
  std::vector<json> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("run writes one directory per problem and is idempotent") {
  const auto dir = testing::temp_dir("cli-run");
  const auto out = dir / "runs";
  auto first = cli(run_args(out), dir);
  INFO(first.output);
  REQUIRE(first.code == 0);
  CHECK(first.output.find("conflicts_resolved=0") != std::string::npos);
  CHECK(first.output.find("answer=96") != std::string::npos);
  const auto run_dir = out / "lcm-96-excomm-n3-s11";
  CHECK(fs::exists(RunFiles{run_dir}.trace()));
  CHECK(fs::exists(RunFiles{run_dir}.record()));
  CHECK(fs::exists(out / "mul-96-excomm-n3-s11" / "record.json"));

  auto again = cli(run_args(out), dir);
  CHECK(again.code == 0);
  CHECK(again.output.find("(existing)") != std::string::npos);
  auto forced = cli(run_args(out) + " --force", dir);
  CHECK(forced.code == 0);
  CHECK(forced.output.find("(existing)") == std::string::npos);
}

TEST_CASE("run flags override the config") {
  const auto dir = testing::temp_dir("cli-flags");
  auto o = cli(run_args(dir / "runs") + " --protocol independent --agents 2 --seed 4 --parallel off",
               dir);
  INFO(o.output);
  REQUIRE(o.code == 0);
  auto record = load_record(dir / "runs" / "lcm-96-independent-n2-s4" / "record.json");
  CHECK(record.config.protocol == Protocol::independent);
  CHECK(record.config.n_agents == 2);
  CHECK_FALSE(record.config.parallel_agents);
  CHECK(record.modules.empty());
}

TEST_CASE("exit codes") {
  const auto dir = testing::temp_dir("cli-codes");
  CHECK(cli(run_args(dir / "a") + " --protocol debate", dir).code == 2);
  CHECK(cli(run_args(dir / "a") + " --update-mode medium", dir).code == 2);
  CHECK(cli("run --out x", dir).code == 2);
  CHECK(cli("frobnicate", dir).code == 2);
  {
    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK(cli(fmt::format("run --config '{}' --problems {}/problems.jsonl --backend {}",
                          (dir / "bad.json").string(), kFixtures, backend()),
              dir)
              .code == 1);
  }
  CHECK(cli(fmt::format("run --problems {}/problems.jsonl --out '{}'", kFixtures,
                        (dir / "b").string()),
            dir)
            .code == 1);  // no backend
  auto budget = cli(run_args(dir / "c") + " --budget-tokens 500", dir);
  INFO(budget.output);
  CHECK(budget.code == 3);
  CHECK(budget.output.find("budget_exhausted") != std::string::npos);
}

TEST_CASE("eval, critic, classify and replay over stored runs") {
  const auto dir = testing::temp_dir("cli-eval");
  const auto runs = dir / "runs";
  REQUIRE(cli(run_args(runs), dir).code == 0);
  REQUIRE(cli(run_args(runs) + " --protocol independent --agents 4", dir).code == 0);

  auto eval = cli(fmt::format("eval --runs '{}' --references {}/problems.jsonl", runs.string(),
                              kFixtures),
                  dir);
  INFO(eval.output);
  REQUIRE(eval.code == 0);
  auto report = jsonl(runs / "report.jsonl");
  bool accuracy = false, normalized = false;
  for (const auto& l : report) {
    if (l["metric"] == "accuracy" && l["group"] == "excomm/N=3") {
      accuracy = true;
      CHECK(l["value"].get<double>() == 1.0);
      CHECK(l["runs"] == 2);
    }
    if (l["metric"] == "normalized_cost" && l["group"] == "independent/N=4") {
      normalized = true;
      CHECK(l["value"].get<double>() == 1.0);
    }
  }
  CHECK(accuracy);
  CHECK(normalized);
  CHECK(fs::exists(runs / "report.txt"));
  CHECK(cli(fmt::format("eval --runs '{}' --metrics speed", runs.string()), dir).code == 2);

  auto critic = cli(fmt::format("critic --runs '{}' --references {}/problems.jsonl --backend {}",
                                runs.string(), kFixtures, backend()),
                    dir);
  INFO(critic.output);
  REQUIRE(critic.code == 0);
  CHECK(critic.output.find("error recovery rate 50.0%") != std::string::npos);
  const auto findings = jsonl(runs / "findings.jsonl");
  CHECK(findings.size() == 2 * 3 + 2 * 4);
  for (const auto& f : findings) CHECK(f["findings"].size() == 2);

  auto classify = cli(fmt::format("classify --runs '{}' --references {}/problems.jsonl --backend {}",
                                  runs.string(), kFixtures, backend()),
                      dir);
  INFO(classify.output);
  REQUIRE(classify.code == 0);
  const auto types = jsonl(runs / "error_types.jsonl");
  CHECK(types.size() == 2 * findings.size());
  for (const auto& t : types) CHECK(t["type"] == "Conflicting");
  CHECK(classify.output.find("Conflicting") != std::string::npos);

  const auto one = runs / "lcm-96-excomm-n3-s11";
  auto replay = cli(fmt::format("replay --run '{}'", one.string()), dir);
  INFO(replay.output);
  CHECK(replay.code == 0);
  CHECK(replay.output.find("VERIFIED") != std::string::npos);

  auto events = load_trace(RunFiles{one}.trace());
  for (auto& e : events)
    if (e.kind == EventKind::response && e.payload.contains("response") &&
        e.payload["response"].contains("text")) {
      e.payload["response"]["text"] = "tampered";
      break;
    }
  {
    std::ofstream trace(RunFiles{one}.trace(), std::ios::trunc);
    for (const auto& e : events) trace << serialize_event(e) << '\n';
  }
  CHECK(cli(fmt::format("replay --run '{}'", one.string()), dir).code == 1);
}

}  // TEST_SUITE

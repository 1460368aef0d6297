// SPDX-License-Identifier: Apache-2.0
//
// concord: run protocols over a problem set, score the runs, ask critics
// about recovery, classify errors and verify stored runs by replay.
#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <fmt/core.h>

#include "concord/codec.hpp"
#include "concord/config.hpp"
#include "concord/evalkit.hpp"
#include "concord/replay.hpp"

using namespace concord;
namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kUsage = 2, kBudget = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string group_of(const RunRecord& r) {
  return fmt::format("{}/N={}", to_string(r.config.protocol), r.config.n_agents);
}

std::string run_id_for(const Problem& p, const ProtocolConfig& c) {
  return fmt::format("{}-{}-n{}-s{}", p.id, to_string(c.protocol), c.n_agents, c.seed);
}

struct StoredRun {
  fs::path dir;
  RunRecord record;
};

std::vector<StoredRun> load_runs(const fs::path& root) {
  if (!fs::is_directory(root))
    throw Error(ErrorCode::io_error, fmt::format("runs directory {} not found", root.string()));
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && fs::exists(RunFiles{entry.path()}.record()))
      dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<StoredRun> runs;
  for (const auto& d : dirs) runs.push_back({d, load_record(RunFiles{d}.record())});
  return runs;
}

std::map<std::string, Problem> load_references(const std::string& path) {
  std::map<std::string, Problem> out;
  for (auto& p : load_problems(path)) out.emplace(p.id, std::move(p));
  return out;
}

const Problem& reference_for(const std::map<std::string, Problem>& refs, const std::string& id) {
  auto it = refs.find(id);
  if (it == refs.end())
    throw Error(ErrorCode::missing_reference, fmt::format("no reference for problem '{}'", id));
  return it->second;
}

RunConfig config_from(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

std::vector<std::string> critic_specs(const std::vector<std::string>& flags, const RunConfig& config) {
  if (!flags.empty()) return flags;
  if (!config.critic_backends.empty()) return config.critic_backends;
  if (!config.backend.empty()) return {config.backend};
  throw Error(ErrorCode::config_error, "no critic backend given (--backend or critic_backends)");
}

json finding_json(const CriticFinding& f) {
  return json{{"description", f.description},
              {"occurrence_step", f.occurrence_step},
              {"recovered_step", f.recovered_step ? json(*f.recovered_step) : json(nullptr)}};
}

CriticFinding finding_from(const json& j) {
  CriticFinding f;
  f.description = j.at("description").get<std::string>();
  f.occurrence_step = j.at("occurrence_step").get<int>();
  if (!j.at("recovered_step").is_null()) f.recovered_step = j["recovered_step"].get<int>();
  return f;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::string config, problems, out = "runs", protocol, update_mode, backend, parallel;
  std::optional<int> agents, period;
  std::optional<long> seed, budget_tokens;
  bool force = false;
};

int cmd_run(const RunArgs& a) {
  RunConfig rc = config_from(a.config);
  ProtocolConfig& pc = rc.protocol;
  try {
    if (!a.protocol.empty()) pc.protocol = protocol_from(a.protocol);
    if (!a.update_mode.empty()) pc.consistency.update_mode = update_mode_from(a.update_mode);
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }
  if (a.agents) pc.n_agents = *a.agents;
  if (a.seed) pc.seed = *a.seed;
  if (a.budget_tokens) pc.budgets.max_tokens = *a.budget_tokens;
  if (a.period) pc.consistency.period = pc.diversify.period = *a.period;
  if (!a.parallel.empty()) pc.parallel_agents = a.parallel == "on";
  if (!a.backend.empty()) rc.backend = a.backend;
  pc = normalize_config(pc);
  if (rc.backend.empty())
    throw Error(ErrorCode::config_error, "no backend configured (--backend or \"backend\")");
  auto backend = make_backend(rc.backend);
  const auto problems = load_problems(a.problems);
  if (problems.empty()) throw Error(ErrorCode::config_error, "problem set is empty");

  const fs::path out(a.out);
  if (rc.sandbox.root.empty()) rc.sandbox.root = out / ".sandboxes";
  LocalToolkit toolkit(rc.sandbox);

  int failed = 0, exhausted = 0;
  for (const auto& problem : problems) {
    const auto run_id = run_id_for(problem, pc);
    const RunFiles files{out / run_id};
    RunRecord record;
    bool skipped = false;
    if (!a.force && fs::exists(files.record())) {
      record = load_record(files.record());
      skipped = true;
    } else {
      fs::create_directories(files.dir);
      try {
        {
          TraceRecorder recorder(files.trace());
          RunContext ctx{backend, toolkit, recorder, run_id};
          record = run_protocol(problem, pc, ctx);
        }
        save_record(files.record(), record, problem);
      } catch (const Error& e) {
        fmt::print(stderr, "{}: {}\n", run_id, e.what());
        ++failed;
        continue;
      }
    }
    std::size_t resolved = 0;
    for (const auto& m : record.modules) resolved += m.resolutions.size();
    fmt::print("{}{}  status={}  answer={}  rounds={}  conflicts_resolved={}  tokens={}\n", run_id,
               skipped ? " (existing)" : "", to_string(record.status), record.aggregated_display,
               record.rounds, resolved, record.usage.total());
    failed += record.status == RunStatus::failed;
    exhausted += record.status == RunStatus::budget_exhausted;
  }
  if (failed == static_cast<int>(problems.size())) return kFailure;
  if (exhausted > 0) return kBudget;
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string runs, references, metrics = "accuracy,diversity,cost", config, out;
};

int cmd_eval(const EvalArgs& a) {
  static const std::set<std::string> known{"accuracy", "diversity", "cost"};
  std::set<std::string> metrics;
  std::stringstream ss(a.metrics);
  for (std::string m; std::getline(ss, m, ',');) {
    if (!known.count(m)) throw UsageError(fmt::format("unknown metric '{}'", m));
    metrics.insert(m);
  }
  if (metrics.count("accuracy") && a.references.empty())
    throw UsageError("accuracy needs --references");
  const RunConfig rc = config_from(a.config);
  const auto runs = load_runs(a.runs);
  if (runs.empty()) throw Error(ErrorCode::io_error, fmt::format("no runs under {}", a.runs));

  std::map<std::string, std::vector<RunRecord>> groups;
  std::vector<RunRecord> all;
  for (const auto& r : runs) {
    groups[group_of(r.record)].push_back(r.record);
    all.push_back(r.record);
  }
  std::map<std::string, std::string> refs;
  if (!a.references.empty())
    for (const auto& [id, p] : load_references(a.references))
      if (p.reference_answer) refs[id] = *p.reference_answer;

  std::vector<json> lines;
  auto emit = [&](const std::string& group, const std::string& metric, json value, std::size_t n) {
    lines.push_back(json{{"group", group}, {"metric", metric}, {"value", value}, {"runs", n}});
  };
  for (const auto& [group, records] : groups) {
    if (metrics.count("accuracy")) emit(group, "accuracy", accuracy(records, refs), records.size());
    if (metrics.count("diversity")) {
      // Single-agent runs have nothing to compare; they are left out.
      double traj = 0.0, step = 0.0;
      std::size_t n = 0;
      for (const auto& r : records) {
        try {
          traj += trajectory_diversity(r);
          step += step_diversity(r);
          ++n;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::degenerate_input) throw;
        }
      }
      if (n > 0) {
        emit(group, "trajectory_diversity", traj / n, n);
        emit(group, "step_diversity", step / n, n);
      }
    }
  }
  if (metrics.count("cost"))
    for (const auto& row : cost_summary(all, rc.prices)) {
      emit(row.label, "cost", row.cost, row.runs);
      if (row.normalized) emit(row.label, "normalized_cost", *row.normalized, row.runs);
      emit(row.label, "median_latency_ms", row.median_latency_ms, row.runs);
      emit(row.label, "prompt_tokens", row.prompt_tokens, row.runs);
      emit(row.label, "completion_tokens", row.completion_tokens, row.runs);
    }

  const fs::path out = a.out.empty() ? fs::path(a.runs) : fs::path(a.out);
  fs::create_directories(out);
  std::ofstream jl(out / "report.jsonl", std::ios::trunc);
  std::ofstream txt(out / "report.txt", std::ios::trunc);
  const auto header = fmt::format("{:<24} {:<22} {:>14} {:>6}\n", "group", "metric", "value", "runs");
  txt << header;
  std::cout << header;
  for (const auto& l : lines) {
    jl << l.dump() << '\n';
    const auto row = fmt::format("{:<24} {:<22} {:>14.4f} {:>6}\n", l["group"].get<std::string>(),
                                 l["metric"].get<std::string>(), l["value"].get<double>(),
                                 l["runs"].get<std::size_t>());
    txt << row;
    std::cout << row;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// critic

struct CriticArgs {
  std::string runs, references, config, out;
  std::vector<std::string> backends;
};

int cmd_critic(const CriticArgs& a) {
  const RunConfig rc = config_from(a.config);
  const auto specs = critic_specs(a.backends, rc);
  const auto refs = load_references(a.references);
  const auto runs = load_runs(a.runs);
  const fs::path out = a.out.empty() ? fs::path(a.runs) : fs::path(a.out);
  fs::create_directories(out);

  std::ofstream jl(out / "findings.jsonl", std::ios::trunc);
  TraceRecorder trace(out / "critic_trace.jsonl");
  // group -> critic -> pooled findings of consistent reports
  std::map<std::string, std::vector<std::vector<CriticFinding>>> pooled;
  std::map<std::string, int> skipped;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    ModelClient client(make_backend(specs[c]), 0);
    for (const auto& run : runs) {
      const auto& problem = reference_for(refs, run.record.problem_id);
      auto& per_critic = pooled[group_of(run.record)];
      per_critic.resize(specs.size());
      for (const auto& agent : run.record.agents) {
        TraceBuffer sink(Actor{ActorKind::orchestrator}, 0, Clock::now());
        auto outcome = critic_recovery(agent, problem, client, sink,
                                       fmt::format("critic.c{}.{}", c, run.record.run_id));
        trace.flush(sink);
        json fs_json = json::array();
        for (const auto& f : outcome.findings) fs_json.push_back(finding_json(f));
        jl << json{{"run_id", run.record.run_id},
                   {"problem_id", run.record.problem_id},
                   {"group", group_of(run.record)},
                   {"agent", agent.index},
                   {"critic", c},
                   {"status", to_string(outcome.status)},
                   {"findings", fs_json}}
                  .dump()
           << '\n';
        if (outcome.status != CriticStatus::ok) {
          ++skipped[group_of(run.record)];
          continue;
        }
        auto& bucket = per_critic[c];
        bucket.insert(bucket.end(), outcome.findings.begin(), outcome.findings.end());
      }
    }
  }
  for (const auto& [group, per_critic] : pooled) {
    for (std::size_t c = 0; c < per_critic.size(); ++c) {
      auto rate = error_recovery_rate(per_critic[c]);
      fmt::print("{}  critic {}  findings={}  recovery={}\n", group, c, per_critic[c].size(),
                 rate ? fmt::format("{:.1f}%", *rate) : std::string("n/a"));
    }
    auto avg = multi_critic_rate(per_critic);
    fmt::print("{}  error recovery rate {}  (excluded reports: {})\n", group,
               avg ? fmt::format("{:.1f}%", *avg) : std::string("n/a"), skipped[group]);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyArgs {
  std::string runs, findings, references, config, out, backend;
};

int cmd_classify(const ClassifyArgs& a) {
  const RunConfig rc = config_from(a.config);
  const std::string spec = !a.backend.empty() ? a.backend : critic_specs({}, rc).front();
  const auto refs = load_references(a.references);
  std::map<std::string, RunRecord> by_id;
  for (auto& r : load_runs(a.runs)) by_id.emplace(r.record.run_id, std::move(r.record));
  const fs::path findings_path =
      a.findings.empty() ? fs::path(a.runs) / "findings.jsonl" : fs::path(a.findings);
  std::ifstream in(findings_path);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot open {}", findings_path.string()));
  const fs::path out = a.out.empty() ? fs::path(a.runs) : fs::path(a.out);
  fs::create_directories(out);

  ModelClient client(make_backend(spec), 0);
  TraceRecorder trace(out / "classify_trace.jsonl");
  std::ofstream jl(out / "error_types.jsonl", std::ios::trunc);
  std::map<std::string, std::map<std::string, int>> table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto entry = json::parse(line);
    if (entry.at("status") != "ok") continue;
    const auto run_id = entry.at("run_id").get<std::string>();
    auto it = by_id.find(run_id);
    if (it == by_id.end())
      throw Error(ErrorCode::io_error, fmt::format("findings refer to unknown run '{}'", run_id));
    const auto& record = it->second;
    const auto& problem = reference_for(refs, record.problem_id);
    const auto agent = entry.at("agent").get<AgentIndex>();
    const auto critic = entry.value("critic", 0);
    int k = 0;
    for (const auto& fj : entry.at("findings")) {
      const auto finding = finding_from(fj);
      TraceBuffer sink(Actor{ActorKind::orchestrator}, 0, Clock::now());
      auto label = classify_error_type(
          finding, record, agent, problem, client, sink,
          fmt::format("classify.{}.a{}.c{}.{}", run_id, agent, critic, k++));
      trace.flush(sink);
      const std::string type = label ? std::string(to_string(label->type)) : "Unparsed";
      ++table[group_of(record)][type];
      jl << json{{"run_id", run_id},
                 {"agent", agent},
                 {"critic", critic},
                 {"finding", fj},
                 {"category", label ? json(label->category) : json(nullptr)},
                 {"type", type}}
                .dump()
         << '\n';
    }
  }
  const std::vector<std::string> columns{"Conflicting", "Common", "Neutral", "Excluded", "Unparsed"};
  fmt::print("{:<24}", "group");
  for (const auto& c : columns) fmt::print(" {:>12}", c);
  fmt::print("\n");
  for (const auto& [group, counts] : table) {
    fmt::print("{:<24}", group);
    for (const auto& c : columns) fmt::print(" {:>12}", counts.count(c) ? counts.at(c) : 0);
    fmt::print("\n");
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_replay(const std::string& dir) {
  auto record = replay_run(RunFiles{dir});
  fmt::print("VERIFIED {} ({} rounds, answer {})\n", record.run_id, record.rounds,
             record.aggregated_display);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent test-time scaling runs and their evaluation"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a protocol over a problem set");
  run_cmd->add_option("--problems", run.problems, "Problems JSONL")->required();
  run_cmd->add_option("--config", run.config, "Run configuration (JSON)");
  run_cmd->add_option("--out", run.out, "Output directory for runs")->capture_default_str();
  run_cmd->add_option("--protocol", run.protocol,
                      "base_agent | sequential_revision | independent | independent_sr | excomm");
  run_cmd->add_option("--agents", run.agents, "Number of agents");
  run_cmd->add_option("--seed", run.seed, "Sampling seed");
  run_cmd->add_option("--budget-tokens", run.budget_tokens, "Token budget per run");
  run_cmd->add_option("--period", run.period, "Rounds between module invocations");
  run_cmd->add_option("--update-mode", run.update_mode, "soft | hard");
  run_cmd->add_option("--parallel", run.parallel, "Agents run concurrently")
      ->check(CLI::IsMember({"on", "off"}));
  run_cmd->add_option("--backend", run.backend, "Backend spec, overrides the config");
  run_cmd->add_flag("--force", run.force, "Re-run problems that already have a record");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score stored runs");
  eval_cmd->add_option("--runs", eval.runs, "Runs directory")->required();
  eval_cmd->add_option("--references", eval.references, "Problems JSONL with reference answers");
  eval_cmd->add_option("--metrics", eval.metrics, "Comma-separated: accuracy,diversity,cost")
      ->capture_default_str();
  eval_cmd->add_option("--config", eval.config, "Configuration with prices");
  eval_cmd->add_option("--out", eval.out, "Report directory (default: the runs directory)");

  CriticArgs critic;
  auto* critic_cmd = app.add_subcommand("critic", "Critic-based error recovery analysis");
  critic_cmd->add_option("--runs", critic.runs, "Runs directory")->required();
  critic_cmd->add_option("--references", critic.references, "Problems JSONL with references")
      ->required();
  critic_cmd->add_option("--backend", critic.backends, "Critic backend spec (repeatable)");
  critic_cmd->add_option("--config", critic.config, "Configuration with critic_backends");
  critic_cmd->add_option("--out", critic.out, "Output directory (default: the runs directory)");

  ClassifyArgs classify;
  auto* classify_cmd = app.add_subcommand("classify", "Classify critic findings by error type");
  classify_cmd->add_option("--runs", classify.runs, "Runs directory")->required();
  classify_cmd->add_option("--references", classify.references, "Problems JSONL")->required();
  classify_cmd->add_option("--findings", classify.findings, "findings.jsonl from `critic`");
  classify_cmd->add_option("--backend", classify.backend, "Classifier backend spec");
  classify_cmd->add_option("--config", classify.config, "Configuration");
  classify_cmd->add_option("--out", classify.out, "Output directory (default: the runs directory)");

  std::string replay_dir;
  auto* replay_cmd = app.add_subcommand("replay", "Re-execute a stored run and compare");
  replay_cmd->add_option("--run", replay_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*eval_cmd) return cmd_eval(eval);
    if (*critic_cmd) return cmd_critic(critic);
    if (*classify_cmd) return cmd_classify(classify);
    if (*replay_cmd) return cmd_replay(replay_dir);
  } catch (const UsageError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return kUsage;
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailure;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailure;
  }
  return kUsage;
}

// SPDX-License-Identifier: Apache-2.0
//
// Metrics over run records: accuracy, Self-BLEU diversity, critic-based
// error recovery, error-type classification and cost.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "concord/orchestrator.hpp"
#include "concord/prompts.hpp"
#include "concord/self_bleu.hpp"

namespace concord {

/// Mean exact match of aggregated answers against `references` (by problem
/// id) after normalization. Throws MissingReference.
double accuracy(const std::vector<RunRecord>& records,
                const std::map<std::string, std::string>& references);

/// Reasoning text of one round: the step's thoughts plus the findings it
/// added. Tool outputs are left out.
std::string render_round(const RoundStep& step);
std::string render_trajectory(const AgentTrajectory& trajectory);

/// Diversity across the agents' whole trajectories.
double trajectory_diversity(const RunRecord& record);

/// `per_agent[i]` maps round -> rendering for agent i. Averages
/// diversity_score over rounds where at least two agents have text.
/// Throws DegenerateInput when there is no such round.
double step_diversity(const std::vector<std::map<int, std::string>>& per_agent);
double step_diversity(const RunRecord& record);

// ---------------------------------------------------------------------------
// Critic

/// Step k is round k; step 0 is initialization.
std::vector<prompts::CriticStep> critic_steps(const AgentTrajectory& trajectory);

enum class CriticStatus { ok, inconsistent, unevaluable };

std::string_view to_string(CriticStatus s);

struct CriticOutcome {
  CriticStatus status = CriticStatus::ok;
  std::vector<CriticFinding> findings;
};

/// Requests the critic report, re-asking once when a finding is recovered
/// no later than it occurred, and once more when the final answer is wrong
/// yet every finding is marked recovered (then flagged inconsistent).
CriticOutcome critic_recovery(const AgentTrajectory& trajectory, const Problem& problem,
                              ModelClient& client, TraceBuffer& sink,
                              const std::string& tag_prefix = "critic");

/// 100 * recovered / total; absent with no findings.
std::optional<double> error_recovery_rate(const std::vector<CriticFinding>& findings);

/// Mean of the per-critic rates that are defined.
std::optional<double> multi_critic_rate(const std::vector<std::vector<CriticFinding>>& per_critic);

// ---------------------------------------------------------------------------
// Error types

enum class ErrorType { conflicting, common, neutral, excluded };

std::string_view to_string(ErrorType t);
ErrorType error_type_of(int category);

/// Peer logs rendered with every step after `occurrence_step` removed.
std::vector<std::pair<std::string, std::string>> truncated_peer_logs(
    const RunRecord& record, AgentIndex agent, int occurrence_step);

struct ErrorLabel {
  int category = 0;
  ErrorType type = ErrorType::excluded;
};

/// nullopt when the classifier output cannot be parsed after one retry.
std::optional<ErrorLabel> classify_error_type(const CriticFinding& finding, const RunRecord& record,
                                              AgentIndex agent, const Problem& problem,
                                              ModelClient& client, TraceBuffer& sink,
                                              const std::string& tag);

// ---------------------------------------------------------------------------
// Cost

struct Prices {
  double prompt_per_token = 1.0;
  double completion_per_token = 1.0;
};

struct CostRow {
  std::string label;  // "<protocol>/N=<n>"
  std::size_t runs = 0;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double cost = 0.0;                 // mean per run
  std::optional<double> normalized;  // relative to independent/N=4
  double median_latency_ms = 0.0;
};

double median(std::vector<double> values);

std::vector<CostRow> cost_summary(const std::vector<RunRecord>& records, const Prices& prices);

}  // namespace concord
